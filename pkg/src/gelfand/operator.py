"""The radial operator L(u) = r^-gamma (r^alpha |u'|^beta u')' and its exponents.

Named families:

* k-Hessian in dimension d: alpha = d - k, beta = k - 1, gamma = d - 1 (theta = 2k)
* p-Laplacian in dimension d: alpha = d - 1, beta = p - 2, gamma = d - 1 (theta = p)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import DomainError

__all__ = [
    "OperatorParams",
    "Regime",
    "make_khessian",
    "make_plaplacian",
    "make_raw",
    "classify_regime",
    "lambda_star_exact",
    "TIE_RTOL",
]

# Relative tolerance under which two float thresholds are considered tied.
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class OperatorParams:
    """Exponent triple (alpha, beta, gamma) of the radial operator.

    Derived exponents are properties, so they can never disagree with the
    triple.  ``origin`` records how the triple was built: ``("khessian", d, k)``,
    ``("plaplacian", d, p)`` or ``("raw",)``.
    """

    alpha: float
    beta: float
    gamma: float
    origin: tuple = field(default=("raw",))

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if self.beta < 0:
            raise DomainError(f"beta must be >= 0, got {self.beta}")
        if not self.alpha > self.beta + 1:
            raise DomainError(
                f"alpha > beta + 1 is required (got alpha={self.alpha}, beta={self.beta})"
            )
        if not self.theta > 0:
            raise DomainError(f"theta = gamma + 2 + beta - alpha must be > 0, got {self.theta}")

    @property
    def theta(self) -> float:
        return self.gamma + 2 + self.beta - self.alpha

    @property
    def alpha_hat(self) -> float:
        return self.alpha / (self.beta + 1)

    @property
    def theta_hat(self) -> float:
        return self.theta / (self.beta + 1)

    @property
    def delta(self) -> float:
        """alpha - beta - 1, the damping rate of the log-variable system."""
        return self.alpha - self.beta - 1

    def exact(self) -> tuple[Fraction, Fraction, Fraction] | None:
        """Rational (alpha, beta, gamma) when the origin carries integer data."""
        kind = self.origin[0]
        if kind in ("khessian", "plaplacian"):
            data = self.origin[1:]
            if all(float(x).is_integer() for x in data):
                d, q = (Fraction(int(float(x))) for x in data)
                if kind == "khessian":
                    return d - q, q - 1, d - 1
                return d - 1, q - 2, d - 1
        return None

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "origin": list(self.origin),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "OperatorParams":
        origin = tuple(data.get("origin", ("raw",)))
        kind = origin[0] if origin else "raw"
        if kind == "khessian":
            return make_khessian(int(origin[1]), int(origin[2]))
        if kind == "plaplacian":
            return make_plaplacian(origin[1], origin[2])
        return make_raw(data["alpha"], data["beta"], data["gamma"])

    def __str__(self):
        kind = self.origin[0]
        if kind == "khessian":
            tag = f"k-Hessian(d={self.origin[1]}, k={self.origin[2]})"
        elif kind == "plaplacian":
            tag = f"p-Laplacian(d={self.origin[1]}, p={self.origin[2]})"
        else:
            tag = "raw"
        return f"{tag}: alpha={self.alpha:g}, beta={self.beta:g}, gamma={self.gamma:g}, theta={self.theta:g}"


def make_khessian(d: int, k: int) -> OperatorParams:
    if int(d) != d or int(k) != k:
        raise DomainError("d and k must be integers")
    d, k = int(d), int(k)
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    if d <= 2 * k:
        raise DomainError(f"d > 2k is required (got d={d}, k={k})")
    return OperatorParams(float(d - k), float(k - 1), float(d - 1), ("khessian", d, k))


def make_plaplacian(d, p) -> OperatorParams:
    if p < 2:
        raise DomainError(f"p >= 2 is required (got p={p})")
    if p >= d:
        raise DomainError(f"p < d is required (got d={d}, p={p})")
    return OperatorParams(float(d - 1), float(p - 2), float(d - 1), ("plaplacian", d, p))


def make_raw(alpha, beta, gamma) -> OperatorParams:
    return OperatorParams(float(alpha), float(beta), float(gamma), ("raw",))


@dataclass(frozen=True)
class Regime:
    """Dynamical regime of the pair (regular, singular) solutions."""

    tag: str  # "Oscillatory" | "Intermediate" | "NonIntersecting"
    delta: float
    focus_threshold: float
    node_threshold: float


def _compare(a, b) -> int:
    """Three-way comparison; floats within TIE_RTOL are equal."""
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return (a > b) - (a < b)
    if abs(a - b) <= TIE_RTOL * max(1.0, abs(a), abs(b)):
        return 0
    return 1 if a > b else -1


def _regime_quantities(params: OperatorParams):
    exact = params.exact()
    if exact is not None:
        alpha, beta, gamma = exact
    else:
        alpha, beta, gamma = params.alpha, params.beta, params.gamma
    theta = gamma + 2 + beta - alpha
    delta = alpha - beta - 1
    return delta, 4 * theta / (beta + 1), 4 * theta * (beta + 1)


def classify_regime(params: OperatorParams) -> Regime:
    delta, focus, node = _regime_quantities(params)
    if _compare(delta, focus) < 0:
        tag = "Oscillatory"
    elif _compare(delta, node) >= 0:
        tag = "NonIntersecting"
    else:
        tag = "Intermediate"
    return Regime(tag, float(delta), float(focus), float(node))


def lambda_star_exact(params: OperatorParams) -> float:
    """theta^(beta+1) (alpha - beta - 1), the singular parameter for f(u) = u."""
    exact = params.exact()
    if exact is not None:
        alpha, beta, gamma = exact
        theta = gamma + 2 + beta - alpha
        if beta.denominator == 1:
            return float(theta ** int(beta + 1) * (alpha - beta - 1))
    return params.theta ** (params.beta + 1) * params.delta
