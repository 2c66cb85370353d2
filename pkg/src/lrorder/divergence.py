"""Phi-divergences and the two test-statistic families.

A phi-divergence between probability vectors is d_phi(p, q) =
sum_k q_k phi(p_k / q_k) for convex phi with phi(1) = phi'(1) = 0 and
phi''(1) > 0, under the conventions 0 phi(0/0) = 0 and
0 phi(p/0) = p lim_{u->inf} phi(u)/u.  The power-divergence family

    d_lambda(p, q) = (sum p^(lambda+1) / q^lambda - 1) / (lambda (lambda+1))

covers the classical statistics: lambda = 0 is Kullback-Leibler, lambda = 1
is Pearson, and d_{-1}(p, q) = d_0(q, p).  Two statistic families compare
the saturated estimate p_bar with the order-restricted fit p_tilde and the
homogeneity fit p_hat:

    T = (2n / phi''(1)) [d_phi(p_bar, p_hat) - d_phi(p_bar, p_tilde)]
    S = (2n / phi''(1)) d_phi(p_tilde, p_hat)

T can come out negative in small samples; the p-value rule treats t <= 0 as
p = 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Union

import numpy as np

from .errors import InfiniteDivergence, LengthMismatch

#: Default lambda grid for reporting both statistic families.
DEFAULT_LAMBDAS = (-1.5, -1.0, -0.5, 0.0, Fraction(2, 3), 1.0, 1.5, 2.0)

_LIMIT_EPS = 1e-8  # switch to the lambda -> 0 / -1 limit formulas
_SUM_TOL = 1e-9


def parse_lambda(token: str) -> Union[float, Fraction]:
    """Parse a CLI lambda token; 'a/b' becomes an exact Fraction."""
    token = token.strip()
    if "/" in token:
        num, den = token.split("/", 1)
        return Fraction(int(num), int(den))
    return float(token)


def lambda_label(lam) -> str:
    """Canonical text form of a lambda value ('2/3' stays rational)."""
    if isinstance(lam, Fraction):
        return f"{lam.numerator}/{lam.denominator}" if lam.denominator != 1 else str(lam.numerator)
    return format(float(lam), "g")


@dataclass(frozen=True)
class PowerDivergence:
    """The Cressie-Read family member with the given lambda.

    Generated by phi_lambda(x) = (x^(lambda+1) - x - lambda(x-1)) /
    (lambda (lambda+1)), normalized so phi''(1) = 1.
    """

    lam: Union[float, Fraction]

    @property
    def phi_dd(self) -> float:
        return 1.0

    @property
    def label(self) -> str:
        return lambda_label(self.lam)

    def divergence(self, p: np.ndarray, q: np.ndarray) -> float:
        return power_divergence(p, q, self.lam)


class CustomPhi:
    """A user-supplied convex phi; phi(1) = phi'(1) = 0 checked at
    construction (tolerance 1e-8), phi''(1) estimated by a second-order
    central difference with step 1e-4.

    ``phi`` must accept any x >= 0.  The p/0 limit convention is resolved by
    probing phi(u)/u at large u, which suits smooth phi; callers with exotic
    tails should avoid zero cells in q.
    """

    def __init__(self, phi: Callable[[float], float]):
        val = float(phi(1.0))
        if abs(val) > 1e-8:
            raise ValueError(f"phi(1) = {val}, expected 0")
        h = 1e-5
        d1 = (float(phi(1.0 + h)) - float(phi(1.0 - h))) / (2 * h)
        if abs(d1) > 1e-8:
            raise ValueError(f"phi'(1) = {d1}, expected 0")
        h2 = 1e-4
        d2 = (float(phi(1.0 + h2)) - 2 * val + float(phi(1.0 - h2))) / (h2 * h2)
        if d2 <= 0:
            raise ValueError(f"phi''(1) = {d2}, expected > 0")
        self.phi = phi
        self.phi_dd = float(d2)
        self.label = getattr(phi, "__name__", "custom")

    def _slope_limit(self) -> float:
        """lim phi(u)/u via probes; +inf raises in the caller."""
        s1 = float(self.phi(1e10)) / 1e10
        s2 = float(self.phi(1e12)) / 1e12
        if s2 > s1 + 1e-6 * max(1.0, abs(s2)):
            return np.inf
        return s2

    def divergence(self, p: np.ndarray, q: np.ndarray) -> float:
        total = 0.0
        slope = None
        for pk, qk in zip(p, q):
            if qk > 0:
                total += qk * float(self.phi(pk / qk))
            elif pk > 0:
                if slope is None:
                    slope = self._slope_limit()
                if not np.isfinite(slope):
                    raise InfiniteDivergence(
                        "p has mass where q vanishes and phi(u)/u diverges"
                    )
                total += pk * slope
            # pk == qk == 0 contributes nothing
        return float(total)


DivergenceSpec = Union[PowerDivergence, CustomPhi]


def _validated(p, q) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise LengthMismatch(f"vector lengths differ: {p.shape} vs {q.shape}")
    for name, v in (("p", p), ("q", q)):
        if (v < 0).any() or not np.all(np.isfinite(v)):
            raise ValueError(f"{name} must be a finite nonnegative vector")
        if abs(v.sum() - 1.0) > _SUM_TOL:
            raise ValueError(f"{name} sums to {v.sum()!r}, not 1")
    return p, q


def _kullback(p: np.ndarray, q: np.ndarray) -> float:
    """sum p log(p/q) with 0 log 0 = 0; infinite if q vanishes under p."""
    mask = p > 0
    if (q[mask] == 0).any():
        raise InfiniteDivergence("p has mass where q vanishes (lambda -> 0 limit)")
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def power_divergence(p, q, lam) -> float:
    """Power divergence d_lambda(p, q), with continuous limits at
    lambda in {0, -1} (threshold 1e-8) and the 0-cell conventions."""
    p, q = _validated(p, q)
    lam = float(lam)
    if abs(lam) < _LIMIT_EPS:
        return _kullback(p, q)
    if abs(lam + 1.0) < _LIMIT_EPS:
        return _kullback(q, p)
    pz, qz = p == 0, q == 0
    if lam > 0 and (qz & ~pz).any():
        raise InfiniteDivergence("q vanishes where p has mass (lambda > 0)")
    if lam < -1 and (pz & ~qz).any():
        raise InfiniteDivergence("p vanishes where q has mass (lambda < -1)")
    both = ~pz & ~qz
    terms = np.zeros_like(p)
    terms[both] = p[both] ** (lam + 1.0) * q[both] ** (-lam)
    value = (terms.sum() - 1.0) / (lam * (lam + 1.0))
    if -1e-12 < value < 0.0:  # rounding at p ~ q
        return 0.0
    return float(value)


def phi_divergence(p, q, spec: DivergenceSpec) -> float:
    """d_phi(p, q) for a PowerDivergence or CustomPhi spec."""
    p, q = _validated(p, q)
    value = spec.divergence(p, q)
    if -1e-12 < value < 0.0:
        return 0.0
    return value


def statistic_T(p_bar, p_tilde, p_hat, n: float, spec: DivergenceSpec) -> float:
    """T = (2n / phi''(1)) [d(p_bar, p_hat) - d(p_bar, p_tilde)].

    Reduces to the likelihood-ratio statistic G^2 at lambda = 0.  May be
    negative in finite samples; downstream p-values map t <= 0 to 1.
    """
    d_hat = phi_divergence(p_bar, p_hat, spec)
    d_tilde = phi_divergence(p_bar, p_tilde, spec)
    return (2.0 * n / spec.phi_dd) * (d_hat - d_tilde)


def statistic_S(p_tilde, p_hat, n: float, spec: DivergenceSpec) -> float:
    """S = (2n / phi''(1)) d(p_tilde, p_hat); reduces to Pearson's X^2 at
    lambda = 1.  Always nonnegative."""
    return (2.0 * n / spec.phi_dd) * phi_divergence(p_tilde, p_hat, spec)


@dataclass(frozen=True)
class TestOutcome:
    """One statistic/p-value cell of a report."""

    family: str  # 'T' or 'S'
    lam: float
    label: str
    statistic: float
    p_value: float
    weights_ref: str

    def __post_init__(self):
        if self.family not in ("T", "S"):
            raise ValueError(f"family must be 'T' or 'S', got {self.family!r}")
        if not np.isfinite(self.statistic):
            raise ValueError("statistic must be finite")
        if not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p-value {self.p_value} outside [0, 1]")
