"""Nonlinearities f with closed-form inverses g = f^-1.

Supported families::

    identity          f(u) = u
    power(p)          f(u) = u^p                 (p > 1/2)
    iterexp(n, p)     f(u) = exp^{n}(u^p)        (n >= 1, p > 0)
    perturbed(d, C0)  f(u) = u + C0 exp(-d u)    (d > 0, C0 d < 1)

Powers are extended oddly to u < 0 (sign(u)|u|^p) so that trajectories
crossing below zero keep a strictly increasing f.  e^{f(u)} is never formed
here; callers combine f with their own exponents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaincc, gammaln

from .errors import DomainError, EvalError

__all__ = [
    "NonlinearitySpec",
    "Identity",
    "Power",
    "IterExp",
    "Perturbed",
    "make_nonlinearity",
    "AssumptionVerdict",
    "AssumptionReport",
    "diagnose_assumptions",
]


def _chain(d1, d2, d3, p0, p1, p2, p3):
    """Derivatives of phi(x(t)) up to order three from those of x and phi."""
    return (
        p0,
        p1 * d1,
        p2 * d1 ** 2 + p1 * d2,
        p3 * d1 ** 3 + 3 * p2 * d1 * d2 + p1 * d3,
    )


def _jet_log(j):
    v, d1, d2, d3 = j
    return _chain(d1, d2, d3, np.log(v), 1 / v, -1 / v ** 2, 2 / v ** 3)


def _jet_exp(j):
    v, d1, d2, d3 = j
    e = np.exp(v)
    return _chain(d1, d2, d3, e, e, e, e)


def _jet_pow(j, a):
    v, d1, d2, d3 = j
    s = np.sign(v)
    m = np.abs(v)
    if a == 1:
        return j
    # odd extension: sign(v)|v|^a (higher derivatives may be infinite at 0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        p0 = s * m ** a
        p1 = a * m ** (a - 1)
        p2 = s * a * (a - 1) * m ** (a - 2)
        p3 = a * (a - 1) * (a - 2) * m ** (a - 3)
        return _chain(d1, d2, d3, p0, p1, p2, p3)


def _seed(x):
    x = np.asarray(x, dtype=float)
    return (x, np.ones_like(x), np.zeros_like(x), np.zeros_like(x))


def _pow_diff(u, h, p):
    """sign(u+h)|u+h|^p - sign(u)|u|^p without cancellation when |h| < u."""
    u = np.asarray(u, dtype=float)
    h = np.asarray(h, dtype=float)
    b = u + h
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # only small relative steps cancel; large ones are exact enough directly
        safe = (u > 0) & (np.abs(h) < u)
        stable = np.where(safe, np.abs(u) ** p * np.expm1(p * np.log1p(h / np.where(u > 0, u, 1.0))), 0.0)
    naive = np.sign(b) * np.abs(b) ** p - np.sign(u) * np.abs(u) ** p
    return np.where(safe, stable, naive)


def _exp_s(x):
    return math.exp(x) if x < 709.0 else math.inf


def _pow_s(u, p):
    return math.copysign(abs(u) ** p, u)


def _pow_diff_s(u, h, p):
    """Scalar twin of :func:`_pow_diff` (the ODE right-hand side calls it per step)."""
    b = u + h
    if u > 0 and abs(h) < u:
        return u ** p * math.expm1(p * math.log1p(h / u))
    return _pow_s(b, p) - _pow_s(u, p)


@dataclass(frozen=True)
class NonlinearitySpec:
    """Base class; concrete families override the evaluators."""

    family: str = field(init=False, default="")

    # f side
    def f(self, u):
        raise NotImplementedError

    def f_derivs(self, u):
        """(f, f', f'', f''') at u."""
        raise NotImplementedError

    def fdiff_scalar(self, u: float, h: float) -> float:
        """float(fdiff(u, h)) for scalars; families override it with math-only code."""
        return float(self.fdiff(u, h))

    def fprime(self, u):
        return self.f_derivs(u)[1]

    def fsecond(self, u):
        return self.f_derivs(u)[2]

    def fdiff(self, u, h):
        """f(u + h) - f(u), evaluated without catastrophic cancellation."""
        return self.f(np.asarray(u) + h) - self.f(u)

    # g side
    def g_derivs(self, t):
        """(g, g', g'', g''') at t."""
        raise NotImplementedError

    def g(self, t):
        return self.g_derivs(t)[0]

    def gprime(self, t):
        return self.g_derivs(t)[1]

    def gsecond(self, t):
        return self.g_derivs(t)[2]

    def gthird(self, t):
        return self.g_derivs(t)[3]

    def gprime_sup(self, t):
        """An upper bound for g' on [t, inf), used by tail majorants."""
        return self.gprime(t)

    def exact_tail(self, u, beta):
        """Closed form of int_u^inf exp(-f/(beta+1)) when one is known, else None."""
        return None

    @property
    def is_identity(self) -> bool:
        return False

    def to_dict(self) -> dict:
        raise NotImplementedError

    def __str__(self):
        params = ", ".join(f"{k}={v:g}" for k, v in self.to_dict()["params"].items())
        return f"{self.family}({params})"


@dataclass(frozen=True)
class Identity(NonlinearitySpec):
    family: str = field(init=False, default="identity")

    def f(self, u):
        return np.asarray(u, dtype=float) * 1.0

    def f_derivs(self, u):
        u = np.asarray(u, dtype=float)
        return (u * 1.0, np.ones_like(u), np.zeros_like(u), np.zeros_like(u))

    def fdiff(self, u, h):
        return np.asarray(h, dtype=float) + 0.0 * np.asarray(u, dtype=float)

    def fdiff_scalar(self, u, h):
        return float(h)

    def g_derivs(self, t):
        return self.f_derivs(t)

    def exact_tail(self, u, beta):
        return (beta + 1) * np.exp(-np.asarray(u, dtype=float) / (beta + 1))

    @property
    def is_identity(self):
        return True

    def to_dict(self):
        return {"family": "identity", "params": {}}


@dataclass(frozen=True)
class Power(NonlinearitySpec):
    p: float = 2.0
    family: str = field(init=False, default="power")

    def __post_init__(self):
        if not self.p > 0.5:
            raise DomainError(f"power family needs p > 1/2 so that g'' -> 0 (got p={self.p})")

    def f(self, u):
        return _jet_pow(_seed(u), self.p)[0]

    def f_derivs(self, u):
        return _jet_pow(_seed(u), self.p)

    def fdiff(self, u, h):
        return _pow_diff(u, h, self.p)

    def fdiff_scalar(self, u, h):
        return _pow_diff_s(float(u), float(h), self.p)

    def g_derivs(self, t):
        return _jet_pow(_seed(t), 1.0 / self.p)

    def gprime_sup(self, t):
        if self.p >= 1:
            return self.gprime(t)
        return math.inf

    def exact_tail(self, u, beta):
        # int_u^inf exp(-s^p/(b+1)) ds = (b+1)^(1/p)/p * Gamma(1/p, u^p/(b+1))
        u = np.asarray(u, dtype=float)
        a = 1.0 / self.p
        x = np.abs(u) ** self.p / (beta + 1)
        upper = np.exp(gammaln(a) + a * math.log(beta + 1)) * gammaincc(a, x) / self.p
        return np.where(u >= 0, upper, np.nan)

    def to_dict(self):
        return {"family": "power", "params": {"p": self.p}}


@dataclass(frozen=True)
class IterExp(NonlinearitySpec):
    n: int = 1
    p: float = 1.0
    family: str = field(init=False, default="iterexp")

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"iterexp needs an integer n >= 1 (got n={self.n})")
        if not self.p > 0:
            raise DomainError(f"iterexp needs p > 0 (got p={self.p})")

    def _inner(self, u):
        return _jet_pow(_seed(u), self.p)

    def f(self, u):
        return self.f_derivs(u)[0]

    def f_derivs(self, u):
        j = self._inner(u)
        with np.errstate(over="ignore"):
            for _ in range(int(self.n)):
                j = _jet_exp(j)
        return j

    def fdiff(self, u, h):
        u = np.asarray(u, dtype=float)
        val = _jet_pow(_seed(u), self.p)[0]
        diff = _pow_diff(u, h, self.p)
        with np.errstate(over="ignore"):
            for _ in range(int(self.n)):
                val = np.exp(val)
                diff = val * np.expm1(diff)
        return diff

    def fdiff_scalar(self, u, h):
        u, h = float(u), float(h)
        val = _pow_s(u, self.p)
        diff = _pow_diff_s(u, h, self.p)
        for _ in range(int(self.n)):
            val = _exp_s(val)
            diff = val * math.expm1(diff) if diff < 709.0 else math.inf
        return diff

    def g_derivs(self, t):
        j = _seed(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            for _ in range(int(self.n)):
                j = _jet_log(j)
            return _jet_pow(j, 1.0 / self.p)

    def gprime_sup(self, t):
        # g' decreases once g'' < 0; push t out until that holds
        t = float(t)
        for _ in range(200):
            if self.gsecond(t) <= 0:
                return float(self.gprime(t))
            t *= 2
        return math.inf

    def to_dict(self):
        return {"family": "iterexp", "params": {"n": int(self.n), "p": self.p}}


@dataclass(frozen=True)
class Perturbed(NonlinearitySpec):
    """f(u) = u + C0 exp(-decay u); |f(u) - u| + |f'(u) - 1| <= C0 (1+decay) e^{-decay u}."""

    decay: float = 1.0
    amplitude: float = 0.5
    family: str = field(init=False, default="perturbed")

    def __post_init__(self):
        if not self.decay > 0:
            raise DomainError(f"perturbed family needs decay > 0 (got {self.decay})")
        if not self.amplitude * self.decay < 1:
            raise DomainError("perturbed family needs C0 * decay < 1 so that f' > 0 on [0, inf)")

    def f(self, u):
        u = np.asarray(u, dtype=float)
        return u + self.amplitude * np.exp(-self.decay * u)

    def f_derivs(self, u):
        u = np.asarray(u, dtype=float)
        c, d = self.amplitude, self.decay
        e = c * np.exp(-d * u)
        return (u + e, 1 - d * e, d * d * e, -(d ** 3) * e)

    def fdiff(self, u, h):
        u = np.asarray(u, dtype=float)
        h = np.asarray(h, dtype=float)
        return h + self.amplitude * np.exp(-self.decay * u) * np.expm1(-self.decay * h)

    def fdiff_scalar(self, u, h):
        u, h = float(u), float(h)
        return h + self.amplitude * _exp_s(-self.decay * u) * math.expm1(-self.decay * h)

    def _invert(self, t):
        c, d = self.amplitude, self.decay
        # for C0 > 0, f decreases left of u_min (f'(u_min) = 0); g is the right branch
        u_min = math.log(c * d) / d if c > 0 else -math.inf
        if u_min > -math.inf and float(self.f(u_min)) > t:
            raise DomainError(f"t={t:g} lies below the range of f on its increasing branch")
        lo, hi = max(t - abs(c) - 1e-12, u_min), t + abs(c) + 1e-12
        f = lambda u: float(self.f(u)) - t
        while f(lo) > 0:
            lo = max(lo - max(1.0, abs(lo)), u_min)
        while f(hi) < 0:
            hi += max(1.0, abs(hi))
        return brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)

    def g_derivs(self, t):
        t = np.asarray(t, dtype=float)
        u = np.vectorize(self._invert, otypes=[float])(t)
        _, f1, f2, f3 = self.f_derivs(u)
        g1 = 1 / f1
        g2 = -f2 / f1 ** 3
        g3 = (3 * f2 ** 2 - f1 * f3) / f1 ** 5
        return (u, g1, g2, g3)

    def gprime_sup(self, t):
        if self.amplitude >= 0:
            return float(self.gprime(t))
        return 1.0

    def to_dict(self):
        return {"family": "perturbed", "params": {"decay": self.decay, "amplitude": self.amplitude}}


_FAMILIES = {
    "identity": Identity,
    "power": Power,
    "iterexp": IterExp,
    "perturbed": Perturbed,
}


def make_nonlinearity(descriptor="identity", **params) -> NonlinearitySpec:
    """Build a spec from ``"identity"``, a family name plus keyword parameters,
    or a JSON-style dict ``{"family": ..., "params": {...}}``.

    >>> make_nonlinearity("power", p=2).g(9.0)
    array(3.)
    """
    if isinstance(descriptor, NonlinearitySpec):
        return descriptor
    if isinstance(descriptor, dict):
        params = {**descriptor.get("params", {}), **params}
        descriptor = descriptor["family"]
    name = str(descriptor).lower()
    if name not in _FAMILIES:
        raise DomainError(f"unknown nonlinearity family {descriptor!r}")
    if name == "perturbed":
        # accept the short names used in configs
        if "delta" in params:
            params["decay"] = params.pop("delta")
        if "C0" in params:
            params["amplitude"] = params.pop("C0")
    try:
        return _FAMILIES[name](**params)
    except TypeError as exc:
        raise DomainError(str(exc)) from None


# --------------------------------------------------------------------------
# grid diagnostics for the growth assumptions


@dataclass(frozen=True)
class AssumptionVerdict:
    name: str
    verdict: str  # "pass" | "fail" | "inconclusive"
    worst_value: float
    worst_location: float
    end_value: float
    note: str = ""


@dataclass(frozen=True)
class AssumptionReport:
    family: str
    threshold: float
    verdicts: tuple

    def __getitem__(self, name):
        for v in self.verdicts:
            if v.name == name:
                return v
        raise KeyError(name)

    @property
    def all_pass(self) -> bool:
        return all(v.verdict == "pass" for v in self.verdicts)

    def summary(self) -> str:
        lines = [f"assumption diagnostics for {self.family} (threshold {self.threshold:g})"]
        for v in self.verdicts:
            note = f"  [{v.note}]" if v.note else ""
            lines.append(
                f"  {v.name:<22s} {v.verdict:<12s} end={v.end_value:.3e} "
                f"worst={v.worst_value:.3e} at t={v.worst_location:.3e}{note}"
            )
        return "\n".join(lines)


def _verdict(name, t, q, threshold, note=""):
    q = np.abs(np.asarray(q, dtype=float))
    half = len(q) // 2
    tail = q[half:]
    worst = int(np.argmax(tail)) + half
    shrinking = bool(np.all(np.diff(tail) <= 1e-12 * np.maximum(tail[:-1], 1e-300)))
    end = float(q[-1])
    if shrinking and end <= threshold:
        verdict = "pass"
    elif end > threshold and tail[-1] >= tail[0]:
        verdict = "fail"
    else:
        verdict = "inconclusive"
    return AssumptionVerdict(name, verdict, float(q[worst]), float(t[worst]), end, note)


def diagnose_assumptions(spec: NonlinearitySpec, t_grid, threshold: float = 1e-2) -> AssumptionReport:
    """Grid evidence (not proof) for the decay conditions on g = f^-1.

    Checks g'' -> 0, (g''/g') ln g' -> 0, the ratio g'(t)/g'(t + sqrt t) -> 1
    as a stand-in for the o(t) perturbation condition, and that
    sup_{s>=t} |g''(s)| stays comparable to |g''(t)|.  The same two limits
    are re-checked in u-space through f''/f'^3 and (f''/f'^2) ln f'.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or len(t) < 32:
        raise DomainError("diagnostic grid needs at least 32 points")
    if np.any(np.diff(t) <= 0) or t[0] <= 0:
        raise DomainError("diagnostic grid must be positive and strictly increasing")
    if t[-1] < 1e3:
        raise DomainError("diagnostic grid must reach t >= 1e3")

    g0, g1, g2, _ = spec.g_derivs(t)
    g1_shift = spec.gprime(t + np.sqrt(t))
    for name, arr in (("g", g0), ("g'", g1), ("g''", g2), ("g'(t+sqrt t)", g1_shift)):
        if not np.all(np.isfinite(arr)):
            raise EvalError(f"{name} is not finite on the diagnostic grid")
    if np.any(g1 <= 0):
        raise EvalError("g' must be positive on the diagnostic grid")

    a2 = g2
    with np.errstate(divide="ignore", invalid="ignore"):
        a4 = g2 / g1 * np.log(g1)
        a3 = g1 / g1_shift - 1.0
    tail_sup = np.maximum.accumulate(np.abs(g2)[::-1])[::-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(tail_sup > 0, tail_sup / np.abs(g2), 1.0)

    _, f1, f2, _ = spec.f_derivs(g0)
    with np.errstate(divide="ignore", invalid="ignore"):
        a2u = f2 / f1 ** 3
        a4u = f2 / f1 ** 2 * np.log(f1)

    verdicts = [
        _verdict("g'' -> 0", t, a2, threshold),
        _verdict("(g''/g') ln g' -> 0", t, a4, threshold),
        _verdict("g'(t)/g'(t+o(t)) -> 1", t, a3, threshold, note="proxy o(t) = sqrt(t)"),
    ]
    sup_v = _verdict("sup-tail domination", t, tail_sup, threshold)
    half = len(t) // 2
    if np.max(ratio[half:]) > 10.0:
        sup_v = AssumptionVerdict(sup_v.name, "fail", sup_v.worst_value, sup_v.worst_location,
                                  sup_v.end_value, "sup|g''| / |g''| exceeds 10")
    verdicts.append(sup_v)
    verdicts.append(_verdict("f''/f'^3 -> 0 (u-space)", t, a2u, threshold))
    verdicts.append(_verdict("(f''/f'^2) ln f' (u-space)", t, a4u, threshold))
    return AssumptionReport(spec.family, threshold, tuple(verdicts))
