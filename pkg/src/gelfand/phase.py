"""The autonomous log-variable system and regular/singular intersection counts.

For f(u) = u write the canonical solution (coefficient 1) as w(s) and set
t = ln(kappa / s), kappa = (beta+1)^{1/theta}, v(t) = w(s), omega = v'(t)^{beta+1}.
Against the singular solution v*(t) (omega* = theta^{beta+1}) the differences
x = v - v*, y = omega - omega* obey

    x' = (y + theta^{beta+1})^{1/(beta+1)} - theta,
    y' = delta (y - theta^{beta+1} (e^x - 1)),          delta = alpha - beta - 1.

Orientation: t grows as r shrinks.  Near the origin of the phase plane the
motion is clockwise for increasing t, and the origin repels (both
eigenvalues have real part delta/2 > 0), so regular solutions approach the
singular one as r -> infinity.  All user-facing intersection counts are in
r-space.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate
from scipy.optimize import brentq

from .errors import DomainError, DomainExitError, ToleranceError
from .operator import OperatorParams, TIE_RTOL
from .regular import RadialTrajectory
from .singular import SingularSolution

__all__ = [
    "PhaseOrbit",
    "IntersectionReport",
    "classify_fixed_point",
    "integrate_orbit",
    "orbit_from_solution",
    "count_intersections",
    "winding_angle",
]

log = logging.getLogger(__name__)

UNSTABLE_FOCUS = "UnstableFocus"
UNSTABLE_NODE = "UnstableNode"
BORDERLINE = "Borderline"


def classify_fixed_point(params: OperatorParams):
    """Classification of (0, 0) and the roots of mu^2 - delta mu + delta theta/(beta+1) = 0."""
    exact = params.exact()
    if exact is not None:
        alpha, beta, gamma = exact
        theta = gamma + 2 + beta - alpha
        delta = alpha - beta - 1
        disc = delta * delta - 4 * delta * theta / (beta + 1)
        sign = (disc > 0) - (disc < 0)
    else:
        delta = params.delta
        focus = 4 * params.theta / (params.beta + 1)
        if abs(delta - focus) <= TIE_RTOL * max(1.0, abs(delta), abs(focus)):
            sign = 0
        else:
            sign = 1 if delta > focus else -1
    delta = params.delta
    disc = delta * delta - 4 * delta * params.theta / (params.beta + 1)
    if sign < 0:
        kind = UNSTABLE_FOCUS
        im = math.sqrt(-disc) / 2
        eig = (complex(delta / 2, im), complex(delta / 2, -im))
    elif sign > 0:
        kind = UNSTABLE_NODE
        root = math.sqrt(disc)
        big = (delta + root) / 2
        # the smaller root from Vieta avoids cancellation
        small = delta * params.theta / (params.beta + 1) / big
        eig = (complex(big, 0.0), complex(small, 0.0))
    else:
        kind = BORDERLINE
        eig = (complex(delta / 2, 0.0), complex(delta / 2, 0.0))
    return kind, eig


@dataclass(frozen=True, eq=False)
class PhaseOrbit:
    """Orbit samples (t, x, y), ordered by increasing t."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    params: OperatorParams
    classification: str
    eigenvalues: tuple
    exited: bool = False

    def x_sign_changes(self, floor: float = 0.0) -> int:
        """Sign changes of x(t), ignoring samples with |x| <= floor."""
        keep = np.abs(self.x) > floor
        s = np.sign(self.x[keep])
        return int(np.count_nonzero(s[1:] != s[:-1]))

    def as_columns(self):
        return np.column_stack([self.t, self.x, self.y])


def winding_angle(orbit: PhaseOrbit) -> float:
    """Total signed angle swept by (x, y) around the origin (negative = clockwise)."""
    # rescale y to the linearization's natural size so angles are well spread
    b = orbit.params.beta + 1
    yy = orbit.y / (b * orbit.params.theta ** orbit.params.beta)
    ang = np.unwrap(np.arctan2(yy, orbit.x))
    return float(ang[-1] - ang[0])


def _vector_field(params):
    b = params.beta + 1
    th = params.theta
    tb = th ** b
    delta = params.delta

    def rhs(t, z):
        x, y = z
        # (y + theta^b)^{1/b} - theta written to vanish exactly at y = 0
        xp = th * math.expm1(math.log1p(y / tb) / b) if y > -tb else -th
        yp = delta * (y - tb * math.expm1(x))
        return [xp, yp]

    return rhs, tb


def integrate_orbit(params: OperatorParams, x0: float, y0: float, t_span, tol: float = 1e-10,
                    n: int = 2001) -> PhaseOrbit:
    """Integrate the phase system from (x0, y0) over ``t_span`` (either direction).

    Raises DomainExitError (with the partial orbit attached) if y reaches the
    boundary y = -theta^{beta+1} of the vector field's domain.
    """
    rhs, tb = _vector_field(params)
    guard = 1e-9 * tb
    if not y0 > -tb + guard:
        raise DomainError("y0 must exceed -theta^(beta+1)")
    kind, eig = classify_fixed_point(params)
    t0, t1 = float(t_span[0]), float(t_span[1])

    def boundary(t, z):
        return z[1] + tb - guard

    boundary.terminal = True
    rtol = min(max(tol / 100, 2.5e-14), 1e-6)
    res = integrate.solve_ivp(rhs, (t0, t1), [x0, y0], method="DOP853", dense_output=True,
                              rtol=rtol, atol=rtol * 1e-6, events=[boundary])
    if res.status == -1:
        raise ToleranceError(res.message)
    t_end = float(res.t[-1])
    grid = np.linspace(t0, t_end, n)
    z = res.sol(grid)
    order = np.argsort(grid, kind="stable")
    orbit = PhaseOrbit(grid[order], z[0][order], z[1][order], params, kind, eig,
                       exited=bool(res.t_events[0].size))
    if orbit.exited:
        raise DomainExitError(f"orbit reached y = -theta^(beta+1) at t={t_end:.6g}", orbit=orbit)
    return orbit


def orbit_from_solution(sol, params: Optional[OperatorParams] = None, t_grid=None,
                        n: int = 2001) -> PhaseOrbit:
    """(x, y) along a regular trajectory or singular solution, f(u) = u only.

    ``t_grid`` defaults to a uniform grid over the solution's stored range.
    """
    params = params or sol.params
    nl = sol.nl
    if not nl.is_identity:
        raise DomainError("the autonomous reduction requires f(u) = u")
    b = params.beta + 1
    th = params.theta
    ln_kappa = math.log(b) / th
    c_star = b * math.log(th) + math.log(params.delta)

    if isinstance(sol, RadialTrajectory):
        shift = math.log(sol.lam) / th  # canonical ln s = ln r + shift
        lo_s = sol.log_r[0] + shift
        hi_s = sol.log_r_max + shift

        def at(log_s):
            lr = log_s - shift
            d, nu = sol.state(lr - sol.log_r_offset)
            u = sol.u_ref - d
            return u - (c_star - th * log_s), tb_expm1(nu)
    elif isinstance(sol, SingularSolution):
        if sol.kind == "ExactIdentity":
            lo_s, hi_s = -20.0, 5.0

            def at(log_s):
                z = np.zeros_like(log_s)
                return z, z.copy()
        else:
            lo_s, hi_s = sol.seed_log_r, sol.log_s_max

            def at(log_s):
                w = sol.canonical_log(log_s)
                rv = sol.canonical_rv_log(log_s)
                return w - (c_star - th * log_s), tb_expm1(b * np.log(rv))
    else:
        raise DomainError("expected a RadialTrajectory or SingularSolution")

    tb = th ** b

    def tb_expm1(nu):
        return tb * np.expm1(np.asarray(nu) - b * math.log(th))

    if t_grid is None:
        t_grid = np.linspace(ln_kappa - hi_s, ln_kappa - lo_s, n)
    t_grid = np.sort(np.asarray(t_grid, dtype=float))
    log_s = ln_kappa - t_grid
    x, y = at(log_s)
    kind, eig = classify_fixed_point(params)
    return PhaseOrbit(t_grid, np.asarray(x, float), np.asarray(y, float), params, kind, eig)


@dataclass(frozen=True)
class IntersectionReport:
    interval: tuple
    count: int
    crossing_radii: list = field(default_factory=list)
    grid_stability: bool = True
    inconclusive: int = 0  # noise-level stretches dropped after bisection

    def to_dict(self):
        return {
            "interval": list(self.interval),
            "count": self.count,
            "crossings": list(self.crossing_radii),
            "stable": self.grid_stability,
        }


TANGENCY_FLOOR = 1e-12
MAX_BISECT = 40


def _crossings(diff, floor, lr):
    """Sign changes of diff on the grid lr, skipping noise-level samples."""
    vals = diff(lr)
    mag = floor(lr, vals)
    sig = np.abs(vals) > mag
    brackets = []
    dropped = 0
    idx = np.flatnonzero(sig)
    for i, j in zip(idx[:-1], idx[1:]):
        a, b = lr[i], lr[j]
        sa, sb = np.sign(vals[i]), np.sign(vals[j])
        if sa != sb:
            brackets.append((a, b))
        elif j > i + 1:
            # a noise-level stretch between equal signs: probe by bisection
            # for a hidden pair of crossings
            lo, hi = a, b
            found = None
            probes = [(lo, hi)]
            for _ in range(MAX_BISECT):
                if not probes:
                    break
                p, q = probes.pop(0)
                m = 0.5 * (p + q)
                vm = float(diff(np.array([m]))[0])
                if abs(vm) > float(floor(np.array([m]), np.array([vm]))[0]) and np.sign(vm) != sa:
                    found = m
                    break
                probes.extend([(p, m), (m, q)])
            if found is not None:
                brackets.append((a, found))
                brackets.append((found, b))
            else:
                dropped += 1
    return brackets, dropped


def count_intersections(reg: RadialTrajectory, sing: SingularSolution, r_lo: float, r_hi: float,
                        n: Optional[int] = None, *, swap: bool = False) -> IntersectionReport:
    """Zeros of u(r) - u*(r) on (r_lo, r_hi) for a regular and a singular solution.

    The singular solution is evaluated at the regular trajectory's
    coefficient ``reg.lam``.  Samples where |u - u*| is below the noise level
    max(1e-12, 10 tol) * max(1, |u|) carry no sign; a count is reported
    as stable when it survives one grid refinement.
    """
    if not (0 < r_lo < r_hi):
        raise DomainError("need 0 < r_lo < r_hi")
    l1, l2 = math.log(r_lo), math.log(r_hi)
    if l2 > reg.log_r_max + 1e-9:
        raise DomainError(f"r_hi={r_hi:g} exceeds the regular trajectory's r_max={reg.r_max:g}")
    if l2 > sing.log_r_max(reg.lam) + 1e-9:
        raise DomainError("r_hi exceeds the singular solution's range")
    sgn = -1.0 if swap else 1.0
    noise = max(TANGENCY_FLOOR, 10 * reg.tol)

    def diff(lr):
        return sgn * (reg.u_at_log_r(lr) - sing.value_log(lr, reg.lam))

    def floor(lr, vals):
        return noise * np.maximum(1.0, np.abs(sing.value_log(lr, reg.lam)))

    if n is None:
        n = int(max(400, 50 * (l2 - l1)))
    coarse, _ = _crossings(diff, floor, np.linspace(l1, l2, n))
    fine, dropped = _crossings(diff, floor, np.linspace(l1, l2, 2 * n - 1))
    stable = len(coarse) == len(fine)
    radii = []
    for a, b in fine:
        try:
            root = brentq(lambda z: float(diff(np.array([z]))[0]), a, b, xtol=1e-10, rtol=1e-12)
        except ValueError:
            root = 0.5 * (a + b)  # sign change sits inside the noise band
        radii.append(math.exp(root))
    if dropped:
        log.warning("%d noise-level stretch(es) of u - u* could not be resolved and were dropped",
                    dropped)
    return IntersectionReport((r_lo, r_hi), len(radii), radii, stable, dropped)
