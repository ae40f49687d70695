"""Singular solutions, their asymptotics, and the rescaling to the limit profile.

Conventions.  A singular solution is stored in *canonical* form, i.e. as a
solution w of L(w) + e^{f(w)} = 0 (coefficient 1) that blows up at r = 0.
The solution of L(u) + lam e^{f(u)} = 0 is then u(r) = w(lam^{1/theta} r);
``SingularSolution.lam`` selects which member of this family is evaluated
(by default lam = lambda_star, so that u*(1) = 0).

For f(u) = u the canonical form is w*(s) = ln{theta^{beta+1}(alpha-beta-1)} - theta ln s
and u*(r) = -theta ln r.  For general f the solution is seeded deep inside
the asymptotic regime from

    Z(r) = ln{theta^{beta+1}(alpha-beta-1)} - ln lam* - theta ln r
           + (beta+1) ln{g'(tau) + (beta+1) g''(tau) ln g'(tau)},
    tau  = ln{(beta+1) / (lam* r^theta)},        u ~ g(Z(r)),

and integrated outwards; perturbations of the singular solution decay in
that direction, so seed errors are damped rather than amplified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import integrate

from .errors import DomainError, FitError, SeedError, TailError
from .nonlinearity import NonlinearitySpec
from .operator import OperatorParams, lambda_star_exact
from .regular import RadialTrajectory, _build, _check_tol, _integrate, _s_ref

__all__ = [
    "SingularSolution",
    "exact_singular",
    "asymptotic_Z",
    "numeric_singular",
    "remainder_order",
    "calF",
    "calF1",
    "scaled_tail_integral",
    "I_fun",
    "TildeProfile",
    "transform_tilde",
    "log_epsilon",
]


def _log_const(params: OperatorParams) -> float:
    """ln{theta^{beta+1} (alpha - beta - 1)}."""
    return (params.beta + 1) * math.log(params.theta) + math.log(params.delta)


@dataclass(frozen=True, eq=False)
class SingularSolution:
    """A radial solution that is unbounded at the origin.

    ``kind`` is ``"ExactIdentity"`` (closed form, f(u) = u) or
    ``"AsymptoticSeededNumeric"``.  Evaluation below the seed radius of a
    numeric solution falls back to the asymptotic formula.
    """

    kind: str
    lambda_star: float
    params: OperatorParams
    nl: NonlinearitySpec
    lam: float
    core: Optional[RadialTrajectory] = field(default=None, repr=False)
    seed_log_r: Optional[float] = None  # canonical log radius of the seed
    log_s_max: float = math.inf  # canonical log radius where the data ends
    remainder_order_estimate: Optional[float] = None
    seed_spread: Optional[float] = None  # |lambda* change| under seed refinement

    # canonical (coefficient-1) evaluation in log radius
    def canonical_log(self, log_s):
        log_s = np.asarray(log_s, dtype=float)
        if self.kind == "ExactIdentity":
            return _log_const(self.params) - self.params.theta * log_s
        out = np.empty(np.shape(log_s))
        flat_s = np.atleast_1d(log_s)
        flat = np.atleast_1d(out)
        inner = flat_s < self.seed_log_r
        if np.any(inner):
            flat[inner] = asymptotic_Z(self.params, self.nl, 1.0, None, log_r=flat_s[inner])[1]
        if np.any(~inner):
            flat[~inner] = self.core.u_at_log_r(flat_s[~inner])
        return float(flat[0]) if np.ndim(log_s) == 0 else flat

    def canonical_rv_log(self, log_s):
        """s |w'(s)| of the canonical solution."""
        log_s = np.asarray(log_s, dtype=float)
        if self.kind == "ExactIdentity":
            return np.full(np.shape(log_s), float(self.params.theta))[()]
        if np.any(np.atleast_1d(log_s) < self.seed_log_r):
            raise DomainError("derivative below the seed radius is not stored")
        return self.core.rv_at_log_r(log_s)

    def _shift(self, lam):
        lam = self.lam if lam is None else lam
        return math.log(lam) / self.params.theta

    def value_log(self, log_r, lam: Optional[float] = None):
        """u*(r) for the member with coefficient ``lam`` (default ``self.lam``)."""
        return self.canonical_log(np.asarray(log_r, dtype=float) + self._shift(lam))

    def value(self, r, lam: Optional[float] = None):
        return self.value_log(np.log(r), lam)

    __call__ = value

    def rv_log(self, log_r, lam: Optional[float] = None):
        """r |u*'(r)|, invariant under rescaling."""
        return self.canonical_rv_log(np.asarray(log_r, dtype=float) + self._shift(lam))

    def log_r_max(self, lam: Optional[float] = None) -> float:
        return self.log_s_max - self._shift(lam)

    def rescaled(self, lam: float) -> "SingularSolution":
        if not lam > 0:
            raise DomainError("lambda must be > 0")
        return replace(self, lam=float(lam))

    def canonical(self) -> "SingularSolution":
        """The member solving L(w) + e^{f(w)} = 0."""
        return self.rescaled(1.0)


def exact_singular(params: OperatorParams, nl: Optional[NonlinearitySpec] = None) -> SingularSolution:
    """u*(r) = -theta ln r with lambda* = theta^{beta+1}(alpha - beta - 1)."""
    from .nonlinearity import Identity

    lam = lambda_star_exact(params)
    return SingularSolution("ExactIdentity", lam, params, nl or Identity(), lam)


def _G(nl, tau, beta):
    """G(tau) = g' + (beta+1) g'' ln g'  and its tau-derivative."""
    _, g1, g2, g3 = nl.g_derivs(tau)
    b = beta + 1
    with np.errstate(divide="ignore", invalid="ignore"):
        lg = np.log(g1)
        G = g1 + b * g2 * lg
        dG = g2 + b * (g3 * lg + g2 * g2 / g1)
    return G, dG


def asymptotic_Z(params: OperatorParams, nl: NonlinearitySpec, lambda_star: float, r,
                 *, log_r=None):
    """(Z(r), g(Z(r))) from the singular asymptotic expansion.

    ``log_r`` may be given instead of ``r`` for radii below double range.
    Raises DomainError where the logarithm's argument is not positive.
    """
    if log_r is None:
        log_r = np.log(np.asarray(r, dtype=float))
    log_r = np.asarray(log_r, dtype=float)
    b = params.beta + 1
    tau = math.log(b) - math.log(lambda_star) - params.theta * log_r
    if np.any(tau <= 0):
        raise DomainError("radius too large for the asymptotic regime (tau <= 0)")
    G, _ = _G(nl, tau, params.beta)
    if np.any(~np.isfinite(G)) or np.any(G <= 0):
        raise DomainError("g'(tau) + (beta+1) g''(tau) ln g'(tau) must be positive: radius too large")
    Z = _log_const(params) - math.log(lambda_star) - params.theta * log_r + b * np.log(G)
    u = nl.g(Z)
    if np.ndim(Z) == 0:
        return float(Z), float(u)
    return Z, u


def _seed_state(params, nl, log_s0):
    """Canonical (u, r|u'|) at log radius ``log_s0`` with the exact derivative."""
    b = params.beta + 1
    theta = params.theta
    tau = math.log(b) - theta * log_s0
    if tau < 20:
        raise SeedError(f"seed radius outside the asymptotic regime (tau={tau:.3g} < 20)")
    G, dG = _G(nl, np.array(tau), params.beta)
    G, dG = float(G), float(dG)
    if not (math.isfinite(G) and G > 0 and math.isfinite(dG)):
        raise SeedError("asymptotic correction not positive at the seed radius")
    Z = _log_const(params) - theta * log_s0 + b * math.log(G)
    u0 = float(nl.g(Z))
    # dZ/d ln s = -theta (1 + (beta+1) G'/G); r|u'| = g'(Z) * theta (1 + (beta+1) G'/G)
    rv = float(nl.gprime(Z)) * theta * (1.0 + b * dG / G)
    if not (math.isfinite(u0) and rv > 0):
        raise SeedError("seed state is not finite/decreasing")
    return u0, rv


def _shoot(params, nl, log_s0, tol, log_s_end=None):
    u0, rv0 = _seed_state(params, nl, log_s0)
    b = params.beta + 1
    s_ref = _s_ref(params, nl, u0)
    sig0 = log_s0 - s_ref
    y0 = (0.0, b * math.log(rv0))
    if log_s_end is None:
        # first pass: run until u = 0
        horizon = 2.0 * max(float(nl.f(u0)) - float(nl.f(0.0)), 0.0) / params.theta + 200.0
        res, nfev = _integrate(params, nl, u0, sig0, y0, sig0 + horizon, tol, drop_target=u0,
                                 first_step=1e-3)
        if not res.t_events[1].size:
            raise SeedError("seeded singular solution never reaches u = 0")
        return float(res.t_events[1][0]) + s_ref
    res, nfev = _integrate(params, nl, u0, sig0, y0, log_s_end - s_ref, tol, first_step=1e-3)
    return _build(params, nl, math.inf, tol, res, nfev, s_ref, sig0, "seed", u0)


def numeric_singular(params: OperatorParams, nl: NonlinearitySpec, r0: Optional[float] = None,
                     r_max: float = 1.0, tol: float = 1e-10, *, log_r0: float = -200.0,
                     refine: bool = False) -> SingularSolution:
    """Singular solution from an asymptotic seed at (canonical) radius r0.

    lambda* is read off from the zero R* of the canonical solution,
    lambda* = R*^theta.  With ``refine=True`` the shot is repeated from
    r0/10 and the change in lambda* is stored as ``seed_spread``.
    """
    _check_tol(tol)
    if r0 is not None:
        if not r0 > 0:
            raise DomainError("seed radius must be positive")
        log_r0 = math.log(r0)
    log_zero = _shoot(params, nl, log_r0, tol)
    lam_star = math.exp(params.theta * log_zero)
    spread = None
    if refine:
        lam2 = math.exp(params.theta * _shoot(params, nl, log_r0 - math.log(10.0), tol))
        spread = abs(lam2 - lam_star)
    log_s_end = math.log(r_max) + log_zero
    core = _shoot(params, nl, log_r0, tol, log_s_end=max(log_s_end, log_zero))
    return SingularSolution(
        "AsymptoticSeededNumeric",
        lam_star,
        params,
        nl,
        lam_star,
        core=core,
        seed_log_r=log_r0,
        log_s_max=core.log_r_max,
        seed_spread=spread,
    )


def remainder_order(params: OperatorParams, nl: NonlinearitySpec, r_window=(1e-8, 1e-3),
                    *, n: int = 48, tol: float = 1e-12, sing: Optional[SingularSolution] = None):
    """Exponent q in |u*_numeric - u*_asymptotic| ~ (ln 1/r)^{-q} over ``r_window``.

    Radii are in the lambda*-scaled variable (u*(1) = 0).  The smallest decade
    of the window is excluded from the fit, where the difference is closest
    to the solver's noise floor.
    """
    r_lo, r_hi = r_window
    if not (0 < r_lo < r_hi < 1):
        raise DomainError("need 0 < r_lo < r_hi < 1")
    if sing is None:
        sing = numeric_singular(params, nl, tol=tol)
    lam = sing.lambda_star
    log_r = np.linspace(math.log(r_lo) + math.log(10.0), math.log(r_hi), n)
    if log_r[0] >= log_r[-1]:
        raise DomainError("window must span more than one decade")
    u_num = sing.value_log(log_r, lam)
    _, u_asym = asymptotic_Z(params, nl, lam, None, log_r=log_r)
    diff = u_num - u_asym
    floor = 1e3 * max(tol, 1e-15) * np.max(np.abs(u_num))
    if np.max(np.abs(diff)) < floor:
        raise FitError("remainder is below the noise floor (asymptotics exact to solver precision)")
    if np.any(np.abs(diff) < floor) or np.any(np.sign(diff) != np.sign(diff[0])):
        raise FitError("remainder changes sign or touches the noise floor inside the window")
    x = np.log(-log_r)
    y = np.log(np.abs(diff))
    slope, _ = np.polyfit(x, y, 1)
    return float(-slope)


# --------------------------------------------------------------------------
# the integrals F(u) = int_u^inf exp(-f/(beta+1)) and I(u)


def calF1(u, beta=0.0):
    """F1(u) = (beta+1) e^{-u/(beta+1)}, the f(u) = u instance of F."""
    b = beta + 1
    return b * np.exp(-np.asarray(u, dtype=float) / b)


def _tail_bound(nl, u, X, b):
    """Bound for int_X^inf exp(-[f(u+x) - f(u)]/b) dx."""
    U = u + X
    exact = nl.exact_tail(U, b - 1)
    if exact is not None and np.isfinite(exact):
        # exact_tail integrates exp(-f/b); rescale by e^{f(u)/b}
        return float(exact) * math.exp(float(nl.f(u)) / b)
    sup = nl.gprime_sup(float(nl.f(U)))
    return b * math.exp(-nl.fdiff_scalar(u, X) / b) * sup


def scaled_tail_integral(nl: NonlinearitySpec, u: float, beta: float = 0.0, rtol: float = 1e-12):
    """J(u) = int_0^inf exp(-[f(u+x) - f(u)]/(beta+1)) dx, so F(u) = e^{-f(u)/(beta+1)} J(u).

    The integral is split at a cut X where an analytic tail majorant drops
    below ``rtol`` times the running estimate; [0, X] is done by adaptive
    Gauss-Kronrod quadrature on geometrically growing panels.
    """
    b = beta + 1
    u = float(u)
    if u < 0:
        raise DomainError("F(u) is only defined here for u >= 0")

    def h(x):
        return math.exp(-nl.fdiff_scalar(u, x) / b)

    # natural length: where the exponent has decreased by one unit
    L = 1.0
    fp = float(nl.fprime(u))
    if fp > 0 and math.isfinite(fp):
        L = b / fp
    for _ in range(200):
        if float(nl.fdiff(u, L)) >= b:
            break
        L *= 2
    while L > 1e-300 and float(nl.fdiff(u, L / 2)) >= b:
        L /= 2

    total = 0.0
    a = 0.0
    X = L
    for _ in range(400):
        val, _ = integrate.quad(h, a, X, epsabs=0.0, epsrel=rtol * 0.1, limit=200)
        total += val
        tail = _tail_bound(nl, u, X, b)
        if tail <= rtol * total:
            return total
        a, X = X, 2 * X
        if not math.isfinite(X):
            break
    raise TailError(f"tail of F could not be bounded below rtol={rtol:g} at u={u:g}")


def calF(nl: NonlinearitySpec, u, beta: float = 0.0, *, log: bool = False):
    """F(u) = int_u^inf exp(-f(s)/(beta+1)) ds (or ln F with ``log=True``)."""
    b = beta + 1

    def one(x):
        lnF = -float(nl.f(x)) / b + math.log(scaled_tail_integral(nl, x, beta))
        return lnF if log else math.exp(lnF)

    if np.ndim(u) == 0:
        return one(float(u))
    return np.array([one(float(x)) for x in np.asarray(u, dtype=float)])


def I_fun(nl: NonlinearitySpec, params: OperatorParams, u):
    """I(u) = F(u) f'(u) e^{f(u)/(beta+1)}; tends to beta+1 under the growth assumptions."""
    beta = params.beta

    def one(x):
        return scaled_tail_integral(nl, x, beta) * float(nl.fprime(x))

    if np.ndim(u) == 0:
        return one(float(u))
    return np.array([one(float(x)) for x in np.asarray(u, dtype=float)])


# --------------------------------------------------------------------------
# the rescaled profile u~(s)


@dataclass(frozen=True)
class TildeProfile:
    """u~(s) = F1^{-1}(eps^{-theta/(beta+1)} F(u(eps s))) sampled on ``s``."""

    s: np.ndarray
    u_tilde: np.ndarray
    log_eps: float
    rho: float


def log_epsilon(params: OperatorParams, nl: NonlinearitySpec, rho: float) -> float:
    """ln eps_rho, eps_rho = (F(rho)/F1(1))^{(beta+1)/theta}."""
    b = params.beta + 1
    lnF = calF(nl, rho, params.beta, log=True)
    lnF1 = math.log(b) - 1.0 / b
    return b / params.theta * (lnF - lnF1)


def transform_tilde(traj, nl: NonlinearitySpec, params: OperatorParams, s=None, *,
                    rho: Optional[float] = None) -> TildeProfile:
    """Rescale a regular trajectory (or a singular solution, given ``rho``).

    Computed as u~ = 1 + [f(u) - f(rho)] - (beta+1) ln(J(u)/J(rho)), with
    J the scaled tail integral, which never forms F(rho) itself (it
    underflows for fast f).
    """
    b = params.beta + 1
    if s is None:
        s = np.linspace(0.0, 2.0, 81)
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise DomainError("s must be >= 0")
    if isinstance(traj, SingularSolution):
        if rho is None:
            raise DomainError("a singular input needs the reference level rho")
        rho_ = float(rho)
    else:
        rho_ = float(traj.rho) if rho is None else float(rho)
    if not rho_ > 1:
        raise DomainError("transform needs rho > 1")

    lnJ_rho = math.log(scaled_tail_integral(nl, rho_, params.beta))
    lnF1 = math.log(b) - 1.0 / b
    shift = b / params.theta * (lnJ_rho - lnF1)  # ln eps - s_ref, s_ref = -f(rho)/theta
    log_eps = shift - float(nl.f(rho_)) / params.theta

    out = np.empty_like(s)
    pos = s > 0
    out[~pos] = 1.0
    if np.any(pos):
        ls = np.log(s[pos])
        if isinstance(traj, SingularSolution):
            u = traj.value_log(ls + log_eps, lam=1.0)
            dfu = np.asarray(nl.fdiff(rho_, u - rho_), dtype=float)
        else:
            if traj.u_ref != rho_:
                raise DomainError("trajectory reference level differs from rho")
            # scaling only moves the log-radius offset, so the shifted
            # variable of u(eps s) is the same for every traj.lam
            d, _ = traj.state(ls + shift)
            u = rho_ - d
            dfu = np.asarray(nl.fdiff(rho_, -d), dtype=float)
        if np.any(u < 0):
            raise DomainError("u(eps s) < 0: F is only evaluated for u >= 0")
        lnJ = np.array([math.log(scaled_tail_integral(nl, float(x), params.beta)) for x in u])
        out[pos] = 1.0 + dfu - b * (lnJ - lnJ_rho)
    return TildeProfile(s, out, log_eps, rho_)
