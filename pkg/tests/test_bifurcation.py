import math

import numpy as np
import pytest

from gelfand import (BifurcationCurve, DomainError, convergence_profile, detect_oscillation,
                     lambda_of_rho, lambda_sharp, make_khessian, make_nonlinearity, sweep)
from gelfand.bifurcation import thread_cap

IDENTITY = make_nonlinearity("identity")
P31 = make_khessian(3, 1)


@pytest.fixture(scope="module")
def curve31():
    return sweep(P31, IDENTITY, np.geomspace(0.1, 30, 256))


def test_sweep_oscillates_about_lambda_star(curve31):
    assert curve31.lambda_star == 2.0
    n, amps = detect_oscillation(curve31)
    assert n >= 3 and len(curve31.sign_changes) == n
    # amplitudes between consecutive crossings shrink
    assert all(a > b for a, b in zip(amps, amps[1:]))
    assert abs(curve31.lam[-1] - 2.0) < 0.05
    assert not curve31.failures


def test_sign_change_brackets_hold_a_crossing(curve31):
    for a, b in curve31.sign_changes:
        fa = lambda_of_rho(P31, IDENTITY, a) - 2.0
        fb = lambda_of_rho(P31, IDENTITY, b) - 2.0
        assert fa * fb < 0


def test_curve_below_lambda_sharp(curve31):
    sharp = lambda_sharp(curve31)
    assert np.all(curve31.lam <= sharp + 1e-12)
    assert sharp > curve31.lambda_star


def test_lambda_sharp_parabola():
    rho = np.array([0.0, 1.0, 2.0, 3.0])
    lam = 5.0 - (rho - 1.3) ** 2
    c = BifurcationCurve(rho, lam, 4.0, [], float(lam.max()), P31, IDENTITY)
    assert lambda_sharp(c) == pytest.approx(5.0, rel=1e-12)


def test_node_regime_curve_has_no_sign_changes():
    p = make_khessian(11, 1)
    curve = sweep(p, IDENTITY, np.linspace(0.5, 30, 60))
    assert detect_oscillation(curve)[0] == 0
    # monotone approach from below
    assert np.all(curve.lam < curve.lambda_star + curve.noise)


def test_parallel_sweep_is_deterministic(monkeypatch):
    grid = np.linspace(0.5, 12, 24)
    monkeypatch.delenv("GELFAND_THREADS", raising=False)
    serial = sweep(P31, IDENTITY, grid, workers=1)
    parallel = sweep(P31, IDENTITY, grid, workers=3)
    assert np.array_equal(serial.lam, parallel.lam)
    assert serial.sign_changes == parallel.sign_changes


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("GELFAND_THREADS", "2")
    assert thread_cap(8) == 2
    monkeypatch.setenv("GELFAND_THREADS", "junk")
    assert thread_cap(3) == 3
    monkeypatch.delenv("GELFAND_THREADS")
    assert thread_cap(None) == 1


@pytest.mark.parametrize("grid", [[], [1.0, 1.0], [0.0, 1.0], [2.0, 1.0]])
def test_sweep_rejects_bad_grid(grid):
    with pytest.raises(DomainError):
        sweep(P31, IDENTITY, grid)


def test_sweep_nonidentity_uses_numeric_lambda_star():
    nl = make_nonlinearity("power", p=2)
    curve = sweep(P31, nl, np.linspace(1.0, 4.0, 7), tol=1e-9)
    assert curve.lambda_star == pytest.approx(2.95426, rel=1e-5)
    assert np.all(np.isfinite(curve.lam))


def test_convergence_profile_decreases():
    d = convergence_profile(P31, IDENTITY, [0.0, 10.0, 20.0, 40.0])
    assert all(a > b for a, b in zip(d, d[1:]))
    assert d[-1] < 1e-3


def test_convergence_profile_rejects_window():
    with pytest.raises(DomainError):
        convergence_profile(P31, IDENTITY, [5.0], r_window=(1.0, 0.5))


def test_summary_contents(curve31):
    s = curve31.summary()
    assert s["lambda_star"] == 2.0
    assert len(s["sign_changes"]) == len(curve31.sign_changes)
    assert math.isfinite(s["lambda_sharp"])
