"""The bifurcation diagram rho -> lambda(rho) and convergence to the singular solution."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError, GelfandError
from .nonlinearity import NonlinearitySpec
from .operator import OperatorParams, lambda_star_exact
from .regular import lambda_of_rho, log_lambda_of_rho, solve_ivp, to_scaled
from .singular import exact_singular, numeric_singular

__all__ = [
    "BifurcationCurve",
    "sweep",
    "detect_oscillation",
    "lambda_sharp",
    "convergence_profile",
    "thread_cap",
]


@dataclass(frozen=True, eq=False)
class BifurcationCurve:
    """Samples of lambda(rho) with the sign-change analysis against lambda*.

    Failed grid points are listed in ``failures`` as (rho, message) and are
    excluded from ``rho``/``lam``.
    """

    rho: np.ndarray
    lam: np.ndarray
    lambda_star: float
    sign_changes: list
    lambda_sharp_estimate: float
    params: OperatorParams
    nl: NonlinearitySpec
    tol: float = 1e-10
    failures: list = field(default_factory=list)

    @property
    def points(self):
        return list(zip(self.rho.tolist(), self.lam.tolist()))

    @property
    def noise(self) -> float:
        """|lambda - lambda*| below this is treated as sign-less."""
        return 10.0 * self.tol * self.lambda_star

    def summary(self) -> dict:
        return {
            "lambda_star": self.lambda_star,
            "lambda_sharp": lambda_sharp(self) if len(self.lam) else float("nan"),
            "sign_changes": [list(b) for b in self.sign_changes],
            "failures": [[r, m] for r, m in self.failures],
        }


def thread_cap(requested: Optional[int] = None) -> int:
    """Worker count, capped by the GELFAND_THREADS environment variable."""
    cap = os.environ.get("GELFAND_THREADS")
    n = requested if requested is not None else 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return max(1, n)


def _one_point(args):
    params, nl, rho, tol = args
    try:
        return rho, lambda_of_rho(params, nl, rho, tol), None
    except GelfandError as exc:
        return rho, math.nan, f"{type(exc).__name__}: {exc}"


def _significant_signs(values, noise):
    s = np.sign(values)
    s[np.abs(values) <= noise] = 0
    return s


def _sign_change_brackets(rho, diff, noise):
    s = _significant_signs(diff, noise)
    idx = np.flatnonzero(s)
    out = []
    for i, j in zip(idx[:-1], idx[1:]):
        if s[i] != s[j]:
            out.append((i, j))
    return out


def sweep(params: OperatorParams, nl: NonlinearitySpec, rho_grid, tol: float = 1e-10, *,
          lambda_star: Optional[float] = None, workers: Optional[int] = None,
          verify: bool = True) -> BifurcationCurve:
    """lambda(rho) on ``rho_grid``; lambda* is exact for f(u) = u, numeric otherwise.

    Each recorded sign change of lambda - lambda* is verified by one extra
    solve at the bracket midpoint and narrowed to the half that holds it.
    """
    rho_grid = np.asarray(rho_grid, dtype=float)
    if rho_grid.ndim != 1 or rho_grid.size == 0:
        raise DomainError("rho_grid must be a nonempty 1-d sequence")
    if np.any(np.diff(rho_grid) <= 0):
        raise DomainError("rho_grid must be strictly increasing")
    if np.any(rho_grid <= 0):
        raise DomainError("rho_grid must be positive (lambda(0) = 0)")
    if lambda_star is None:
        if nl.is_identity:
            lambda_star = lambda_star_exact(params)
        else:
            lambda_star = numeric_singular(params, nl, tol=max(tol, 1e-12)).lambda_star

    jobs = [(params, nl, float(r), tol) for r in rho_grid]
    n_workers = thread_cap(workers)
    if n_workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_one_point, jobs, chunksize=max(1, len(jobs) // (4 * n_workers))))
    else:
        results = [_one_point(j) for j in jobs]

    failures = [(r, msg) for r, _, msg in results if msg is not None]
    ok = [(r, lam) for r, lam, msg in results if msg is None]
    rho = np.array([r for r, _ in ok])
    lam = np.array([v for _, v in ok])
    noise = 10.0 * tol * lambda_star
    brackets = []
    for i, j in _sign_change_brackets(rho, lam - lambda_star, noise):
        a, b = rho[i], rho[j]
        if verify:
            mid = 0.5 * (a + b)
            _, lm, msg = _one_point((params, nl, mid, tol))
            if msg is None and abs(lm - lambda_star) > noise:
                if np.sign(lm - lambda_star) == np.sign(lam[i] - lambda_star):
                    a = mid
                else:
                    b = mid
        brackets.append((float(a), float(b)))
    sharp = float(np.max(lam)) if lam.size else math.nan
    return BifurcationCurve(rho, lam, float(lambda_star), brackets, sharp, params, nl, tol, failures)


def detect_oscillation(curve: BifurcationCurve):
    """(number of sign changes of lambda - lambda*, amplitudes at interior extrema).

    Amplitudes are max |lambda - lambda*| over each stretch bounded by two
    consecutive sign changes, in order of increasing rho.
    """
    if len(curve.lam) < 2:
        return 0, []
    diff = curve.lam - curve.lambda_star
    pairs = _sign_change_brackets(curve.rho, diff, curve.noise)
    amps = []
    for (_, j0), (i1, _) in zip(pairs[:-1], pairs[1:]):
        seg = np.abs(diff[j0:i1 + 1])
        amps.append(float(np.max(seg)))
    return len(pairs), amps


def lambda_sharp(curve: BifurcationCurve) -> float:
    """Largest sampled lambda, refined by a parabola through its neighbours."""
    lam = curve.lam
    if lam.size == 0:
        raise DomainError("empty curve")
    k = int(np.argmax(lam))
    best = float(lam[k])
    if 0 < k < lam.size - 1:
        x = curve.rho[k - 1:k + 2]
        y = lam[k - 1:k + 2]
        a, b, c = np.polyfit(x - x[1], y, 2)
        if a < 0:
            xv = -b / (2 * a)
            if x[0] - x[1] <= xv <= x[2] - x[1]:
                best = max(best, float(c - b * b / (4 * a)))
    return best


def convergence_profile(params: OperatorParams, nl: NonlinearitySpec, rho_list,
                        r_window=(0.5, 1.5), tol: float = 1e-10, n: int = 201):
    """sup over r_window of |u_lambda(rho)(r) - u*(r)| for each rho.

    u_lambda(rho)(r) = u(lambda(rho)^{1/theta} r, rho) is the regular solution
    rescaled to the unit ball; u* is the singular solution at lambda*.  For
    rho = 0 (lambda = 0) the unscaled u(r, 0) is used.  Only f(u) = u is
    covered by the limit theorem; other f are reported, not asserted.
    """
    r1, r2 = r_window
    if not (0 < r1 < r2):
        raise DomainError("need 0 < r1 < r2")
    sing = exact_singular(params, nl) if nl.is_identity else numeric_singular(params, nl, tol=tol,
                                                                              r_max=2 * r2)
    r = np.linspace(r1, r2, n)
    lr = np.log(r)
    u_star = sing.value_log(lr, sing.lambda_star)
    out = []
    for rho in rho_list:
        rho = float(rho)
        if rho == 0:
            traj = solve_ivp(params, nl, 0.0, r2, tol)
        else:
            ll = log_lambda_of_rho(params, nl, rho, tol)
            traj = solve_ivp(params, nl, rho, None, tol, log_r_max=math.log(r2) + ll / params.theta)
            traj = to_scaled(traj, math.exp(ll))
        out.append(float(np.max(np.abs(traj.u_at_log_r(lr) - u_star))))
    return out
