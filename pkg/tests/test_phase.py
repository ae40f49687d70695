import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gelfand import (DomainError, classify_fixed_point, classify_regime, count_intersections,
                     exact_singular, find_radius, integrate_orbit, make_khessian, make_nonlinearity,
                     make_raw, numeric_singular, orbit_from_solution, solve_ivp, winding_angle)
from gelfand.errors import DomainExitError

IDENTITY = make_nonlinearity("identity")


def test_focus_eigenvalues_three_one():
    kind, (m1, m2) = classify_fixed_point(make_khessian(3, 1))
    # mu^2 - mu + 2 = 0
    assert kind == "UnstableFocus"
    assert m1 == pytest.approx(complex(0.5, math.sqrt(7) / 2), abs=1e-15)
    assert m2 == m1.conjugate()


def test_node_eigenvalues_eleven_one():
    kind, (m1, m2) = classify_fixed_point(make_khessian(11, 1))
    # mu^2 - 9 mu + 18 = 0
    assert kind == "UnstableNode"
    assert (m1.real, m2.real) == pytest.approx((6.0, 3.0), abs=1e-14)


def test_borderline_is_exact():
    kind, (m1, m2) = classify_fixed_point(make_khessian(10, 1))
    assert kind == "Borderline"
    assert m1 == m2 == complex(4.0, 0.0)


def test_vieta_small_root_accuracy():
    # delta much larger than the focus threshold: the small root suffers
    # cancellation in the quadratic formula, not through Vieta
    p = make_raw(1e8 + 1.0, 0.0, 1e8 + 0.5)
    _, (big, small) = classify_fixed_point(p)
    expect = p.delta * p.theta / (p.beta + 1)
    assert (big * small).real == pytest.approx(expect, rel=1e-14)


@given(st.floats(0.0, 3.0), st.floats(0.05, 40.0), st.floats(0.1, 6.0))
@settings(max_examples=100)
def test_eigen_relations_and_regime(beta, gap, theta):
    alpha = beta + 1 + gap
    p = make_raw(alpha, beta, theta + alpha - beta - 2)
    kind, (m1, m2) = classify_fixed_point(p)
    prod = p.delta * p.theta / (p.beta + 1)
    assert abs((m1 + m2).real - p.delta) <= 1e-12 * max(1.0, p.delta)
    assert abs((m1 * m2).real - prod) <= 1e-12 * max(1.0, prod)
    assert m1.real > 0 and m2.real > 0  # the origin repels
    focus = kind == "UnstableFocus"
    assert focus == (classify_regime(p).tag == "Oscillatory")


def _orbit(dk, rho=10.0):
    p = make_khessian(*dk)
    traj = solve_ivp(p, IDENTITY, rho, find_radius(p, IDENTITY, rho, 0.0, 1e-11), 1e-11)
    return p, traj, orbit_from_solution(traj)


@pytest.mark.parametrize("dk", [(3, 1), (5, 2), (11, 1)])
def test_orbit_matches_direct_integration(dk):
    # integrate the phase system from a point on the orbit toward larger r
    # (decreasing t, the stable direction) and compare with the trajectory
    p, traj, orb = _orbit(dk)
    tb = p.theta ** (p.beta + 1)
    t_hi = orb.t[orb.y > -0.5 * tb].max()
    t_lo = orb.t[0] + 0.05 * (orb.t[-1] - orb.t[0])
    grid = np.linspace(t_lo, t_hi, 200)
    ref = orbit_from_solution(traj, t_grid=grid)
    direct = integrate_orbit(p, ref.x[-1], ref.y[-1], (t_hi, t_lo), tol=1e-11, n=200)
    assert np.max(np.abs(direct.x - ref.x)) < 1e-9
    assert np.max(np.abs(direct.y - ref.y)) < 1e-9


def test_winding_focus_vs_node():
    _, _, focus = _orbit((3, 1))
    _, _, node = _orbit((11, 1))
    assert winding_angle(focus) < -2 * math.pi  # clockwise, more than one turn
    assert abs(winding_angle(node)) < math.pi


def test_singular_orbit_is_the_origin():
    orb = orbit_from_solution(exact_singular(make_khessian(3, 1)))
    assert np.all(orb.x == 0) and np.all(orb.y == 0)


def test_orbit_requires_identity():
    p = make_khessian(3, 1)
    traj = solve_ivp(p, make_nonlinearity("power", p=2), 1.0, 1.0)
    with pytest.raises(DomainError):
        orbit_from_solution(traj)


def test_domain_exit_carries_orbit():
    p = make_khessian(3, 1)
    with pytest.raises(DomainExitError) as info:
        integrate_orbit(p, 3.0, 0.0, (0.0, 5.0))
    orb = info.value.orbit
    assert orb is not None and orb.exited
    assert orb.y.min() > -p.theta ** (p.beta + 1)


def test_integrate_rejects_start_outside_domain():
    with pytest.raises(DomainError):
        integrate_orbit(make_khessian(3, 1), 0.0, -5.0, (0.0, -1.0))


# --- intersections ---------------------------------------------------------


def test_oscillatory_intersections():
    p = make_khessian(3, 1)
    R = find_radius(p, IDENTITY, 20.0, 0.0)
    traj = solve_ivp(p, IDENTITY, 20.0, R)
    rep = count_intersections(traj, exact_singular(p), 1e-6, R)
    assert rep.count >= 2 and rep.grid_stability
    sing = exact_singular(p)
    for r in rep.crossing_radii:
        assert abs(traj.u_at(r) - sing.value(r, traj.lam)) < 1e-8
    assert rep.crossing_radii == sorted(rep.crossing_radii)


@pytest.mark.parametrize("rho", [5.0, 10.0, 20.0])
def test_node_regime_no_intersections(rho):
    p = make_khessian(11, 1)
    traj = solve_ivp(p, IDENTITY, rho, 1e3)
    rep = count_intersections(traj, exact_singular(p), 1e-8, 1e3)
    assert rep.count == 0 and rep.grid_stability


@pytest.mark.parametrize("dk,rho", [((3, 1), 12.0), ((5, 2), 8.0)])
def test_count_symmetric(dk, rho):
    p = make_khessian(*dk)
    R = find_radius(p, IDENTITY, rho, 0.0)
    traj = solve_ivp(p, IDENTITY, rho, R)
    sing = exact_singular(p)
    a = count_intersections(traj, sing, 1e-5, R)
    b = count_intersections(traj, sing, 1e-5, R, swap=True)
    assert a.count == b.count
    assert np.allclose(a.crossing_radii, b.crossing_radii, rtol=1e-9)


def test_count_with_numeric_singular():
    p = make_khessian(3, 1)
    nl = make_nonlinearity("power", p=2)
    sing = numeric_singular(p, nl, r_max=4.0, tol=1e-11)
    R = find_radius(p, nl, 6.0, 0.0)
    traj = solve_ivp(p, nl, 6.0, R)
    rep = count_intersections(traj, sing, 1e-4, R)
    assert rep.count >= 1


def test_count_rejects_bad_interval():
    p = make_khessian(3, 1)
    traj = solve_ivp(p, IDENTITY, 2.0, 1.0)
    sing = exact_singular(p)
    with pytest.raises(DomainError):
        count_intersections(traj, sing, 0.5, 0.1)
    with pytest.raises(DomainError):
        count_intersections(traj, sing, 1e-3, 2.0)
