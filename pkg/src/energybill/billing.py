"""Cloud billing under a two-level autoscaling rule.

For aggregate volume ``psi`` and quota ``c_b`` the per-interval bill is
``g_b psi + i_b max(0, c_b - psi) + p_b max(0, psi - c_b)``; its expectation
rearranges to::

    B_exp(c_b) = r_tot (g_b + p_b) - p_b c_b + (i_b + p_b) L(c_b)

which is convex in ``c_b`` and minimised at the ``p_b / (i_b + p_b)``
quantile of the aggregate volume.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

from . import distributions as dist
from .distributions import Family, QueryVolumeDistribution
from .numerics import erf, erf_inv

__all__ = [
    "BillingParams",
    "expected_billing",
    "expected_billing_generic",
    "optimal_quota",
    "min_billing",
]

_SQRT_PI = math.sqrt(math.pi)


class RateWarning(UserWarning):
    pass


@dataclass(frozen=True)
class BillingParams:
    g_b: float                   # $/b transfer and storage
    i_b: float                   # $/b idle instances
    p_b: float                   # $/b active instances
    c_b: float | None = None     # quota in bits; None means "use the optimum"

    def __post_init__(self):
        if not self.g_b >= 0:
            raise ValueError("g_b must be >= 0")
        if not self.i_b > 0:
            raise ValueError("i_b must be > 0")
        if not self.p_b >= 0:
            raise ValueError("p_b must be >= 0")
        if self.c_b is not None and not self.c_b >= 0:
            raise ValueError("c_b must be >= 0")

    @property
    def critical_ratio(self) -> float:
        return self.p_b / (self.i_b + self.p_b)

    def with_quota(self, c_b: float | None) -> "BillingParams":
        return replace(self, c_b=None if c_b is None else float(c_b))


def _quota(b: BillingParams, agg: QueryVolumeDistribution) -> float:
    if b.c_b is None:
        return optimal_quota(b, agg)
    return b.c_b


def expected_billing_generic(b: BillingParams, agg: QueryVolumeDistribution) -> float:
    c = _quota(b, agg)
    r = agg.mean
    return r * (b.g_b + b.p_b) - b.p_b * c + (b.i_b + b.p_b) * dist.lower_partial_moment(agg, c)


def expected_billing(b: BillingParams, agg: QueryVolumeDistribution) -> float:
    """Expected bill per interval ($) at quota ``b.c_b`` (optimum if unset)."""
    c = _quota(b, agg)
    g, i, p, r = b.g_b, b.i_b, b.p_b, agg.mean
    f = agg.family
    if f is Family.UNIFORM and c <= 2.0 * r:
        return (g + p) * r - p * c + (i + p) * c * c / (4.0 * r)
    if f is Family.PARETO and c >= agg.scale:
        a = agg.alpha
        # (a-1)^(a-1) / (a^a c^(a-1)) r^a, evaluated in logs
        tail = math.exp((a - 1.0) * math.log(a - 1.0) - a * math.log(a)
                        + a * math.log(r) - (a - 1.0) * math.log(c))
        return (g - i) * r + (i + p) * tail + i * c
    if f is Family.EXPONENTIAL:
        return (g - i) * r + i * c + (i + p) * r * math.exp(-c / r)
    if f is Family.HALF_GAUSSIAN:
        z = c / (_SQRT_PI * r)
        return (g + p) * r - p * c + (i + p) * (c * erf(z) + r * math.expm1(-z * z))
    if f is Family.FIXED and c >= r:
        return (g - i) * r + i * c
    return expected_billing_generic(b.with_quota(c), agg)


def optimal_quota(b: BillingParams, agg: QueryVolumeDistribution) -> float:
    """Billing-minimising quota (bits): the ``p_b/(i_b+p_b)`` quantile."""
    if b.p_b <= b.i_b:
        warnings.warn("p_b <= i_b: scaling up never saves money; optimum sits at a low quantile",
                      RateWarning, stacklevel=2)
    if b.p_b == 0:
        return 0.0
    i, p, r = b.i_b, b.p_b, agg.mean
    f = agg.family
    if f is Family.UNIFORM:
        return 2.0 * p * r / (i + p)
    if f is Family.PARETO:
        return ((i + p) / i) ** (1.0 / agg.alpha) * agg.scale
    if f is Family.EXPONENTIAL:
        return r * math.log1p(p / i)
    if f is Family.HALF_GAUSSIAN:
        return r * _SQRT_PI * erf_inv(b.critical_ratio)
    return r


def min_billing(b: BillingParams, agg: QueryVolumeDistribution) -> float:
    """Expected bill at the optimal quota ($ per interval); linear in ``r_tot``."""
    g, i, p, r = b.g_b, b.i_b, b.p_b, agg.mean
    f = agg.family
    if p == 0:
        return expected_billing(b.with_quota(0.0), agg)
    if f is Family.UNIFORM:
        return (g + p - p * p / (i + p)) * r
    if f is Family.PARETO:
        return (g - i + i * ((i + p) / i) ** (1.0 / agg.alpha)) * r
    if f is Family.EXPONENTIAL:
        return (g + i * math.log1p(p / i)) * r
    if f is Family.HALF_GAUSSIAN:
        x = erf_inv(b.critical_ratio)
        return (g - i + (i + p) * math.exp(-x * x)) * r
    return g * r
