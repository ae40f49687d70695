"""Acceptance suite: one test per criterion, at the stated tolerances.

Each test records a PASS/FAIL line (printed immediately and repeated in the
terminal summary by ``conftest.py``) and then asserts.  Run on its own with

    pytest tests/test_acceptance.py -v

or as a script: ``python tests/test_acceptance.py``.
"""
import math

import mpmath
import numpy as np
from scipy.special import exp1

from gelfand import (I_fun, calF, classify_fixed_point, classify_regime, convergence_profile,
                     count_intersections, detect_oscillation, exact_singular, find_radius,
                     lambda_of_rho, lambda_sharp, lambda_star_exact, make_khessian,
                     make_nonlinearity, make_plaplacian, make_raw, numeric_singular,
                     pohozaev_residual, remainder_order, solve_ivp, sweep, transform_tilde)
from gelfand.singular import log_epsilon

IDENTITY = make_nonlinearity("identity")
EXP = make_nonlinearity("iterexp", n=1)  # e^{f(u)} = e^{e^u}

RESULTS = {}


def report(n, ok, detail):
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


def test_criterion_01_exact_lambda_star():
    got = (lambda_star_exact(make_khessian(3, 1)), lambda_star_exact(make_khessian(5, 2)),
           lambda_star_exact(make_plaplacian(5, 3)))
    report(1, got == (2.0, 16.0, 18.0), f"lambda* = {got}")


def _relative_residual(params, sing, r):
    # L(u*) + lambda* e^{u*} with the flux derivative taken at 40 digits
    mpmath.mp.dps = 40
    a, b, g, th = (mpmath.mpf(x) for x in (params.alpha, params.beta, params.gamma, params.theta))

    def flux(x):
        du = -th / x
        return x ** a * abs(du) ** b * du

    rm = mpmath.mpf(r)
    src = sing.lambda_star * mpmath.exp(mpmath.mpf(float(sing.value(r))))
    return float(abs(rm ** (-g) * mpmath.diff(flux, rm) + src) / src)


def test_criterion_02_exact_singular_residual():
    worst = 0.0
    for dk in [(3, 1), (5, 2), (7, 3)]:
        p = make_khessian(*dk)
        sing = exact_singular(p)
        worst = max(worst, max(_relative_residual(p, sing, r) for r in np.geomspace(1e-8, 1, 33)))
    report(2, worst <= 1e-12, f"max relative residual {worst:.2e} (<= 1e-12)")


def test_criterion_03_numeric_shooting():
    errs = {}
    for dk in [(3, 1), (5, 2)]:
        p = make_khessian(*dk)
        errs[dk] = abs(numeric_singular(p, IDENTITY).lambda_star - lambda_star_exact(p))
    report(3, max(errs.values()) <= 1e-4,
           "|lambda*_num - lambda*| = " + ", ".join(f"{dk}: {e:.1e}" for dk, e in errs.items()))


def test_criterion_04_oscillation():
    p = make_khessian(3, 1)
    curve = sweep(p, IDENTITY, np.geomspace(0.1, 30, 256))
    n, _ = detect_oscillation(curve)
    verified = sum(
        (lambda_of_rho(p, IDENTITY, a) - 2) * (lambda_of_rho(p, IDENTITY, b) - 2) < 0
        for a, b in curve.sign_changes)
    edge = abs(curve.lam[-1] - 2.0)
    report(4, verified >= 3 and verified == n and edge < 0.05,
           f"{verified} verified sign changes, |lambda(30) - 2| = {edge:.2e}")


def test_criterion_05_intersection_dichotomy():
    p = make_khessian(3, 1)
    R = find_radius(p, IDENTITY, 20.0, 0.0)
    osc = count_intersections(solve_ivp(p, IDENTITY, 20.0, R), exact_singular(p), 1e-6, R)
    q = make_khessian(11, 1)
    node = [count_intersections(solve_ivp(q, IDENTITY, rho, 1e3), exact_singular(q), 1e-8, 1e3)
            for rho in (5.0, 10.0, 20.0)]
    ok = osc.count >= 2 and all(r.count == 0 and r.grid_stability for r in node)
    report(5, ok, f"(3,1) count={osc.count}; (11,1) counts={[r.count for r in node]}, "
                  f"stable={[r.grid_stability for r in node]}")


def _classification_grid():
    grid = [make_khessian(d, 1) for d in range(3, 19)]            # 16, includes d = 10
    grid += [make_khessian(d, 2) for d in range(5, 17)]           # 12
    grid += [make_khessian(d, 3) for d in range(7, 15)]           # 8
    grid += [make_plaplacian(d, p) for d, p in
             [(3, 2.5), (4, 3), (5, 3), (6, 3), (8, 4), (10, 4), (20, 4), (30, 2.5)]]  # 8
    grid += [make_raw(a, b, g) for a, b, g in
             [(2.0, 0.0, 2.0), (9.0, 0.0, 9.0), (3.5, 0.5, 2.0), (6.0, 2.0, 4.0),
              (40.0, 1.0, 39.0), (1.2, 0.1, 0.3)]]                # 6
    return grid


def test_criterion_06_fixed_point_classification():
    grid = _classification_grid()
    worst, mismatches = 0.0, 0
    for p in grid:
        kind, (m1, m2) = classify_fixed_point(p)
        prod = p.delta * p.theta / (p.beta + 1)
        worst = max(worst, abs((m1 + m2).real - p.delta) / max(1.0, p.delta),
                    abs((m1 * m2).real - prod) / max(1.0, prod))
        mismatches += (kind == "UnstableFocus") != (classify_regime(p).tag == "Oscillatory")
    boundary = classify_fixed_point(make_khessian(10, 1))[0]
    report(6, len(grid) == 50 and worst <= 1e-12 and mismatches == 0 and boundary == "Borderline",
           f"{len(grid)} points, max Vieta error {worst:.1e}, {mismatches} focus/regime "
           f"mismatches, (10,1) -> {boundary}")


def _perturbed(traj, eps=1e-3):
    from dataclasses import replace

    def sol(s):
        y = traj.sol(s)
        return y * (np.array([1 + eps, 1.0])[:, None] if np.ndim(y) == 2 else [1 + eps, 1.0])

    return replace(traj, sol=sol)


def test_criterion_07_pohozaev():
    tol = 1e-8
    worst, weakest = 0.0, math.inf
    for dk, rho in [((3, 1), 1.0), ((3, 1), 8.0), ((5, 2), 2.0), ((7, 3), 4.0), ((11, 1), 3.0),
                    ((4, 1), 6.0)]:
        p = make_khessian(*dk)
        R = find_radius(p, IDENTITY, rho, 0.0, tol)
        traj = solve_ivp(p, IDENTITY, rho, R, tol)
        bad = _perturbed(traj)
        for a in (0.0, 0.1, p.delta / (p.beta + 2)):
            good = pohozaev_residual(traj, a, 1e-4 * R, R)
            worst = max(worst, good)
            weakest = min(weakest, pohozaev_residual(bad, a, 1e-4 * R, R) / max(good, tol))
    report(7, worst <= 10 * tol and weakest >= 10,
           f"max residual {worst:.1e} (<= {10 * tol:.0e}), min degradation x{weakest:.0f}")


def test_criterion_08_quadrature():
    worst = 0.0
    for beta, dk in [(0.0, (3, 1)), (1.0, (5, 2)), (2.0, (7, 3))]:
        p = make_khessian(*dk)
        assert p.beta == beta
        worst = max(worst, max(abs(I_fun(IDENTITY, p, u) - (beta + 1)) for u in np.linspace(0, 50, 51)))
    f0 = calF(EXP, 0.0)
    ok = worst <= 1e-8 and abs(f0 - exp1(1.0)) <= 1e-6 and abs(f0 - 0.219384) <= 1e-6
    report(8, ok, f"max |I - (beta+1)| = {worst:.1e}, calF(e^u, 0) = {f0:.9f}")


def test_criterion_09_remainder_order():
    # Expected to FAIL: on this window ln(1/r) is only 7..18, where the
    # remainder is still pre-asymptotic; see the deep-window test in
    # test_singular.py for the asymptotic exponent.
    q = remainder_order(make_khessian(3, 1), EXP, (1e-8, 1e-3))
    report(9, q >= 1.8, f"fitted q = {q:.3f} (>= 1.8) on r in [1e-8, 1e-3]")


def test_criterion_10_convergence():
    p = make_khessian(3, 1)
    sup = convergence_profile(p, IDENTITY, [10.0, 20.0, 40.0])
    w = solve_ivp(p, IDENTITY, 1.0, 2.0, 1e-11)
    s = np.linspace(0, 2, 81)
    tilde = []
    for rho in (10.0, 15.0, 20.0):
        traj = solve_ivp(p, EXP, rho, None, 1e-11,
                         log_r_max=log_epsilon(p, EXP, rho) + math.log(2.5))
        prof = transform_tilde(traj, EXP, p, s)
        tilde.append(float(np.max(np.abs(prof.u_tilde[1:] - w.u_at(s[1:])))))
    dec = lambda v: all(a > b for a, b in zip(v, v[1:]))  # noqa: E731
    report(10, dec(sup) and dec(tilde),
           "sup|u - u*| = " + ", ".join(f"{x:.2e}" for x in sup)
           + "; sup|u~ - w| = " + ", ".join(f"{x:.2e}" for x in tilde))


def test_criterion_11_lambda_sharp():
    p = make_khessian(3, 1)
    coarse = lambda_sharp(sweep(p, IDENTITY, np.geomspace(0.1, 30, 256)))
    fine = lambda_sharp(sweep(p, IDENTITY, np.geomspace(0.1, 30, 511)))
    # agreement to 3 significant digits: within half a unit of the third digit
    half_unit = 0.5 * 10.0 ** (math.floor(math.log10(abs(fine))) - 2)
    report(11, abs(coarse - fine) <= half_unit,
           f"lambda# = {coarse:.6f} (256 pts) vs {fine:.6f} (511 pts)")


if __name__ == "__main__":
    import sys

    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
