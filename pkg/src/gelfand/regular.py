"""Regular radial solutions of L(u) + lam * e^{f(u)} = 0, u(0) = rho, u'(0) = 0.

Integration happens in logarithmic variables.  With s = ln r,

    d   = u_ref - u                  (drop below the reference level),
    nu  = (beta + 1) ln(r |u'|),
    sig = s - s_ref,   s_ref = -(f(u_ref) + ln lam) / theta,

the equation becomes the smooth autonomous-in-f system

    d'  = exp(nu / (beta + 1)),
    nu' = exp(E) - delta,      E = theta sig + [f(u_ref - d) - f(u_ref)] - nu,

where delta = alpha - beta - 1.  Nothing of size e^{f(rho)} is ever formed,
so rho may be large (and ln r extremely negative) without overflow.  Near
r = 0 the solution follows the leading-order law

    nu = theta sig - ln(gamma + 1),   d = exp(nu / (beta + 1)) / theta_hat,

which is used below a tiny startup drop and as the analytic continuation
of the trajectory towards the origin.

For f(u) = u the shifted system does not depend on rho at all; this is the
translation identity u(r, rho) = rho + u(e^{rho/theta} r, 0), and trajectories
for every rho share one cached master solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import integrate
from scipy.optimize import brentq

from .errors import (
    BlowupError,
    BracketError,
    DomainError,
    EvalError,
    StepBudgetError,
    ToleranceError,
)
from .nonlinearity import NonlinearitySpec
from .operator import OperatorParams

__all__ = [
    "RadialTrajectory",
    "solve_ivp",
    "find_radius",
    "lambda_of_rho",
    "log_lambda_of_rho",
    "pohozaev_residual",
    "first_integral_defect",
    "to_scaled",
    "primitive_exp_f",
]

EXP_GUARD = 700.0  # abort when the combined exponent E exceeds this
MAX_RHS_EVALS = 5_000_000
MAX_STEP = 1.0  # in ln r; keeps the dense interpolant as accurate as the steps
TOL_RANGE = (1e-14, 1e-3)


def _check_tol(tol):
    lo, hi = TOL_RANGE
    if not (lo <= tol <= hi):
        raise DomainError(f"tol must lie in [{lo:g}, {hi:g}], got {tol:g}")


def _stepper_tol(tol):
    # local error target two decades below the accuracy contract; global
    # error accumulates over O(1/tol^(1/8)) steps.  DOP853 refuses rtol
    # below ~100 eps, which caps the attainable contract near 1e-12.
    return min(max(tol / 1000.0, 2.5e-14), 1e-8)


@dataclass(frozen=True, eq=False)
class RadialTrajectory:
    """Monotone radial solution stored in log variables with dense output.

    ``sigma``/``drop``/``nu`` hold the accepted solver steps; any radius in
    (0, r_max] can be evaluated through :meth:`state`.  ``lam`` is the
    coefficient in front of e^{f(u)} (1 for a freshly solved trajectory,
    changed by :func:`to_scaled`).
    """

    params: OperatorParams
    nl: NonlinearitySpec
    rho: float
    tol: float
    u_ref: float
    log_r_offset: float
    sigma0: float
    sigma_end: float
    sol: object = field(repr=False)
    sigma: np.ndarray = field(repr=False)
    drop: np.ndarray = field(repr=False)
    nu: np.ndarray = field(repr=False)
    lam: float = 1.0
    startup: str = "series"
    nfev: int = 0

    # --- coordinates -------------------------------------------------------
    @property
    def log_r(self) -> np.ndarray:
        return self.sigma + self.log_r_offset

    @property
    def r(self) -> np.ndarray:
        return np.exp(self.log_r)

    @property
    def u(self) -> np.ndarray:
        return self.u_ref - self.drop

    @property
    def uprime(self) -> np.ndarray:
        return -np.exp(self.nu / (self.params.beta + 1) - self.log_r)

    @property
    def log_r_max(self) -> float:
        return self.sigma_end + self.log_r_offset

    @property
    def r_max(self) -> float:
        return math.exp(self.log_r_max)

    # --- evaluation --------------------------------------------------------
    def state(self, sigma):
        """(drop, nu) at shifted log radius ``sigma`` (array-friendly)."""
        sig = np.atleast_1d(np.asarray(sigma, dtype=float))
        if np.any(sig > self.sigma_end * (1 + 1e-14) + 1e-12):
            raise DomainError("requested radius lies beyond the trajectory end")
        d = np.empty_like(sig)
        nu = np.empty_like(sig)
        inner = sig < self.sigma0
        if np.any(inner):
            if self.startup != "series":
                raise DomainError("requested radius lies inside the seed radius")
            p = self.params
            nu_in = p.theta * sig[inner] - math.log(p.gamma + 1)
            nu[inner] = nu_in
            d[inner] = np.exp(nu_in / (p.beta + 1)) / p.theta_hat
        outer = ~inner
        if np.any(outer):
            y = self.sol(np.minimum(sig[outer], self.sigma_end))
            d[outer] = y[0]
            nu[outer] = y[1]
        if np.ndim(sigma) == 0:
            return float(d[0]), float(nu[0])
        return d, nu

    def u_at_log_r(self, log_r):
        d, _ = self.state(np.asarray(log_r, dtype=float) - self.log_r_offset)
        return self.u_ref - d

    def rv_at_log_r(self, log_r):
        """r |u'(r)| at the given log radii."""
        _, nu = self.state(np.asarray(log_r, dtype=float) - self.log_r_offset)
        return np.exp(np.asarray(nu) / (self.params.beta + 1))

    def uprime_at_log_r(self, log_r):
        return -self.rv_at_log_r(log_r) * np.exp(-np.asarray(log_r, dtype=float))

    def u_at(self, r):
        return self.u_at_log_r(np.log(r))

    def uprime_at(self, r):
        return self.uprime_at_log_r(np.log(r))

    def sigma_at_drop(self, target: float) -> float:
        """Shifted log radius where the drop first equals ``target``."""
        if target <= 0:
            return -math.inf
        p = self.params
        if target <= self.drop[0]:
            # inside the analytic startup region
            nu = (p.beta + 1) * math.log(target * p.theta_hat)
            return (nu + math.log(p.gamma + 1)) / p.theta
        idx = int(np.searchsorted(self.drop, target))
        if idx >= len(self.drop):
            raise BracketError(
                f"trajectory drop {self.drop[-1]:.6g} never reaches {target:.6g} before r_max"
            )
        a, b = self.sigma[idx - 1], self.sigma[idx]
        fa = self.sol(a)[0] - target
        if fa >= 0:
            return float(a)
        return brentq(lambda s: self.sol(s)[0] - target, a, b, xtol=1e-15, rtol=1e-15, maxiter=200)

    def samples(self):
        """(r, u, uprime) at the solver's accepted steps."""
        return self.r, self.u, self.uprime


# --------------------------------------------------------------------------
# integration core


def _make_rhs(params, nl, u_ref, budget):
    theta = params.theta
    delta = params.delta
    inv = 1.0 / (params.beta + 1)
    counter = [0]
    identity = nl.is_identity
    fdiff = nl.fdiff_scalar

    def exponent(sig, d, nu):
        if identity:
            return theta * sig - d - nu
        return theta * sig + fdiff(u_ref, -d) - nu

    def rhs(sig, y):
        counter[0] += 1
        if counter[0] > budget:
            raise StepBudgetError(f"right-hand side evaluation budget {budget} exhausted")
        d, nu = y
        E = exponent(sig, d, nu)
        if E > EXP_GUARD:
            E = EXP_GUARD  # the blowup event stops the run right here
        return [math.exp(nu * inv), math.exp(E) - delta]

    return rhs, exponent, counter


def _integrate(params, nl, u_ref, sigma0, y0, sigma_end, tol, drop_target=None,
               budget=MAX_RHS_EVALS, first_step=None):
    rhs, exponent, counter = _make_rhs(params, nl, u_ref, budget)
    rtol = _stepper_tol(tol)

    def blowup(sig, y):
        return EXP_GUARD - 1.0 - exponent(sig, y[0], y[1])

    blowup.terminal = True
    events = [blowup]
    if drop_target is not None:
        def reach(sig, y):
            return y[0] - drop_target

        reach.terminal = True
        reach.direction = 1
        events.append(reach)

    try:
        res = integrate.solve_ivp(
            rhs,
            (sigma0, sigma_end),
            list(y0),
            method="DOP853",
            dense_output=True,
            rtol=rtol,
            atol=[1e-300, rtol],
            max_step=MAX_STEP,
            first_step=first_step,
            events=events,
        )
    except OverflowError as exc:  # pragma: no cover - guarded by the event
        raise BlowupError(str(exc)) from None
    if res.status == -1:
        raise ToleranceError(f"integrator failed: {res.message}")
    if res.t_events[0].size:
        raise BlowupError(
            f"combined exponent f(u) + theta ln r - nu exceeded {EXP_GUARD:g} "
            f"at log r offset sigma={res.t_events[0][0]:.6g}"
        )
    if not np.all(np.isfinite(res.y)):
        raise BlowupError("non-finite state encountered")
    return res, counter[0]


def _startup(params, nl, rho, tol):
    fp = float(nl.fprime(rho))
    if not math.isfinite(fp):
        fp = 1e300
    x0 = max(1e-6 * tol / max(1.0, fp), 1e-280)
    nu0 = (params.beta + 1) * math.log(x0 * params.theta_hat)
    sigma0 = (nu0 + math.log(params.gamma + 1)) / params.theta
    return sigma0, (x0, nu0)


def _s_ref(params, nl, u_ref, lam=1.0):
    return -(float(nl.f(u_ref)) + math.log(lam)) / params.theta


def _build(params, nl, rho, tol, res, nfev, s_ref, sigma0, startup, u_ref, lam=1.0):
    return RadialTrajectory(
        params=params,
        nl=nl,
        rho=rho,
        tol=tol,
        u_ref=u_ref,
        log_r_offset=s_ref,
        sigma0=sigma0,
        sigma_end=float(res.t[-1]),
        sol=res.sol,
        sigma=res.t.copy(),
        drop=res.y[0].copy(),
        nu=res.y[1].copy(),
        lam=lam,
        startup=startup,
        nfev=nfev,
    )


_MASTER_CACHE: dict = {}


def _bucket(sigma_needed: float) -> float:
    return float(2.0 ** max(5, math.ceil(math.log2(max(sigma_needed, 1.0)))))


def _identity_master(params, nl, tol, sigma_needed):
    """rho-independent solution of the shifted system for f(u) = u.

    The end point is rounded up to a power of two so that results never
    depend on which requests happened earlier in the process.
    """
    end = _bucket(sigma_needed)
    key = (params.alpha, params.beta, params.gamma, tol, end)
    hit = _MASTER_CACHE.get(key)
    if hit is not None:
        return hit
    sigma0, y0 = _startup(params, nl, 0.0, tol)
    res, nfev = _integrate(params, nl, 0.0, sigma0, y0, end, tol)
    master = _build(params, nl, 0.0, tol, res, nfev, 0.0, sigma0, "series", 0.0)
    if len(_MASTER_CACHE) > 64:
        _MASTER_CACHE.clear()
    _MASTER_CACHE[key] = master
    return master


def solve_ivp(params: OperatorParams, nl: NonlinearitySpec, rho: float, r_max: float,
              tol: float = 1e-10, *, log_r_max: Optional[float] = None,
              drop_target: Optional[float] = None) -> RadialTrajectory:
    """Integrate the regular solution with u(0) = rho out to ``r_max``.

    Pass ``log_r_max`` instead of ``r_max`` (use ``r_max=None``) for radii
    outside double range.  ``drop_target`` stops the run once
    u = rho - drop_target, which is how level radii are located for fast f.
    """
    _check_tol(tol)
    if not (rho >= 0 and math.isfinite(rho)):
        raise DomainError(f"rho must be finite and >= 0, got {rho}")
    if log_r_max is None:
        if r_max is None or not r_max > 0:
            raise DomainError("r_max must be > 0")
        log_r_max = math.log(r_max)
    s_ref = _s_ref(params, nl, rho)
    sigma_end = log_r_max - s_ref
    sigma0, y0 = _startup(params, nl, rho, tol)
    if sigma_end <= sigma0:
        raise DomainError("r_max lies inside the analytic startup region; increase r_max")

    if nl.is_identity:
        master = _identity_master(params, nl, tol, sigma_end)
        traj = replace(master, rho=float(rho), u_ref=float(rho), log_r_offset=s_ref,
                       sigma_end=sigma_end)
        keep = traj.sigma <= sigma_end
        end_state = traj.state(sigma_end)
        return replace(
            traj,
            sigma=np.append(traj.sigma[keep], sigma_end),
            drop=np.append(traj.drop[keep], end_state[0]),
            nu=np.append(traj.nu[keep], end_state[1]),
        )

    res, nfev = _integrate(params, nl, rho, sigma0, y0, sigma_end, tol, drop_target=drop_target)
    return _build(params, nl, float(rho), tol, res, nfev, s_ref, sigma0, "series", float(rho))


def _fast_f_horizon(params, nl, rho, B):
    """Generous shifted-log-radius budget for u to fall from rho to B."""
    span = float(nl.f(rho)) - float(nl.f(B))
    return 2.0 * max(span, 0.0) / params.theta + 200.0


def _log_radius(params, nl, rho, B, tol):
    if B > rho:
        raise DomainError(f"level B={B} exceeds rho={rho}")
    if B == rho:
        return -math.inf, None
    target = rho - B
    if nl.is_identity:
        end = 32.0
        while True:
            master = _identity_master(params, nl, tol, end)
            if master.drop[-1] >= target:
                sig = master.sigma_at_drop(target)
                return sig, master
            end *= 2
            if end > 1e7:
                raise BracketError(f"u never reaches {B} (rho={rho})")
    s_ref = _s_ref(params, nl, rho)
    horizon = _fast_f_horizon(params, nl, rho, B)
    sigma0, y0 = _startup(params, nl, rho, tol)
    res, nfev = _integrate(params, nl, rho, sigma0, y0, sigma0 + horizon, tol, drop_target=target)
    if not res.t_events[1].size:
        raise BracketError(f"u never reaches B={B} before the guard radius (rho={rho})")
    traj = _build(params, nl, float(rho), tol, res, nfev, s_ref, sigma0, "series", float(rho))
    return float(res.t_events[1][0]), traj


def find_radius(params, nl, rho: float, B: float, tol: float = 1e-10) -> float:
    """R(B, rho): the radius where the regular solution first equals B."""
    _check_tol(tol)
    sig, _ = _log_radius(params, nl, rho, B, tol)
    if sig == -math.inf:
        return 0.0
    return math.exp(sig + _s_ref(params, nl, rho))


def log_lambda_of_rho(params, nl, rho: float, tol: float = 1e-10) -> float:
    """ln lambda(rho) = theta ln R(0, rho), computed without forming R.

    rho = 0 gives -inf: the solution starting at u(0) = 0 is already at the
    boundary level, so R(0, 0) = 0 and lambda(rho) -> 0 as rho -> 0+.
    """
    _check_tol(tol)
    if rho == 0:
        return -math.inf
    sig, _ = _log_radius(params, nl, rho, 0.0, tol)
    return params.theta * sig - float(nl.f(rho))


def lambda_of_rho(params, nl, rho: float, tol: float = 1e-10) -> float:
    """lambda(rho) = R(0, rho)^theta."""
    return math.exp(log_lambda_of_rho(params, nl, rho, tol))


def to_scaled(traj: RadialTrajectory, lam: float) -> RadialTrajectory:
    """u_lam(r) = u(lam^{1/theta} r); solves L(u) + (traj.lam * lam) e^{f(u)} = 0."""
    if not lam > 0:
        raise DomainError("lambda must be > 0")
    if lam == 1:
        return traj
    return replace(
        traj,
        log_r_offset=traj.log_r_offset - math.log(lam) / traj.params.theta,
        lam=traj.lam * lam,
    )


# --------------------------------------------------------------------------
# validation helpers


def primitive_exp_f(nl: NonlinearitySpec, u: float) -> float:
    """Phi(u) = int_0^u e^{f(s)} ds."""
    if nl.is_identity:
        return math.expm1(u)
    val, _ = integrate.quad(lambda s: math.exp(float(nl.f(s))), 0.0, u, epsabs=0.0,
                            epsrel=1e-13, limit=200)
    return val


def _pohozaev_parts(traj: RadialTrajectory, a: float):
    p = traj.params
    b1 = p.beta + 1
    b2 = p.beta + 2
    lnlam = math.log(traj.lam)

    def pieces(log_r):
        d, nu = traj.state(log_r - traj.log_r_offset)
        u = traj.u_ref - d
        grad = math.exp(p.delta * log_r + b2 * nu / b1)  # r^(alpha+1) |u'|^(beta+2)
        flux = math.exp(p.delta * log_r + nu)  # r^alpha |u'|^(beta+1)
        src = math.exp((p.gamma + 1) * log_r + lnlam)  # lam r^(gamma+1)
        return u, grad, flux, src

    def bulk(log_r):
        u, grad, _, src = pieces(log_r)
        phi = primitive_exp_f(traj.nl, u)
        ef = math.exp(float(traj.nl.f(u)))
        return grad * (a - p.delta / b2) + src * ((p.gamma + 1) * phi - a * u * ef)

    def bracket(log_r):
        u, grad, flux, src = pieces(log_r)
        return b1 / b2 * grad + src * primitive_exp_f(traj.nl, u) - a * flux * u

    return bulk, bracket


def pohozaev_residual(traj: RadialTrajectory, a: float, r1: float, r2: float) -> float:
    """Relative mismatch of the Pohozaev-type identity on [r1, r2].

    Left side: int_{r1}^{r2} r^alpha |u'|^{beta+2} (a - (alpha-beta-1)/(beta+2))
               + lam r^gamma ((gamma+1) Phi(u) - a u e^{f(u)}) dr,
    right side: the difference of
               (beta+1)/(beta+2) r^{alpha+1} |u'|^{beta+2} + lam r^{gamma+1} Phi(u)
               + a r^alpha |u'|^beta u' u
    between r2 and r1, with Phi(u) = int_0^u e^f.
    """
    if not (0 < r1 < r2):
        raise DomainError("need 0 < r1 < r2")
    l1, l2 = math.log(r1), math.log(r2)
    if l2 > traj.log_r_max + 1e-12:
        raise DomainError("r2 exceeds the trajectory's r_max")
    bulk, bracket = _pohozaev_parts(traj, a)
    try:
        lhs, _ = integrate.quad(bulk, l1, l2, epsabs=0.0, epsrel=max(traj.tol * 1e-3, 1e-13),
                                limit=400)
        rhs = bracket(l2) - bracket(l1)
    except (OverflowError, ValueError) as exc:
        raise EvalError(f"Pohozaev evaluation failed: {exc}") from None
    if not (math.isfinite(lhs) and math.isfinite(rhs)):
        raise EvalError("non-finite Pohozaev terms")
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1.0)


def first_integral_defect(traj: RadialTrajectory, n_points: int = 50) -> float:
    """max over sample radii of |r^alpha|u'|^{beta+1} - int_0^r lam s^gamma e^{f(u)} ds|
    relative to the left side, using adaptive quadrature in log radius."""
    p = traj.params
    sig = np.linspace(max(traj.sigma0, traj.sigma[0]), traj.sigma_end, n_points)
    worst = 0.0

    def integrand(s, sig_ref, nu_ref):
        d, _ = traj.state(s)
        # (gamma+1) s + ln lam + f(u) - [delta s_ref + nu_ref], all relative to s_ref offsets
        e = ((p.gamma + 1) * s - p.delta * sig_ref - nu_ref
             + traj.nl.fdiff_scalar(traj.u_ref, -d))
        return math.exp(e)

    for s_hi in sig:
        _, nu_hi = traj.state(float(s_hi))
        s0 = traj.sigma0
        # analytic part below the startup radius (leading order)
        head = math.exp((p.gamma + 1) * s0 - p.delta * s_hi - nu_hi) / (p.gamma + 1)
        body, _ = integrate.quad(integrand, s0, float(s_hi), args=(float(s_hi), nu_hi),
                                 epsabs=0.0, epsrel=1e-13, limit=400)
        worst = max(worst, abs(head + body - 1.0))
    return worst
