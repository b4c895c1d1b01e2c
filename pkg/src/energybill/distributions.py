"""Mean-matched query-volume distributions.

Every family is parameterised by its mean volume ``r`` (bits per monitoring
interval), so that families can be swapped without changing the traffic
level:

* Uniform on ``[0, 2r]``
* Pareto with shape ``alpha > 2`` and scale ``v = (alpha - 1) r / alpha``
* Exponential with rate ``1 / r``
* Half-Gaussian with density ``2/(pi r) exp(-psi^2 / (pi r^2))``
* Fixed, the point mass at ``r`` (the Pareto ``alpha -> inf`` limit)

The partial moments below are the only distribution-dependent quantities the
energy and billing models need::

    L(c)  = int_0^c (c - psi) P(psi) dpsi
    U1(c) = int_c^inf (psi - c) P(psi) dpsi = r - c + L(c)
    U2(c) = int_c^inf (psi - c)^2 P(psi) dpsi
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .numerics import erf, erf_inv, erfc

__all__ = [
    "Family",
    "QueryVolumeDistribution",
    "UnsupportedOperation",
    "pdf",
    "cdf",
    "quantile",
    "lower_partial_moment",
    "upper_partial_moment",
    "upper_sq_partial_moment",
    "second_moment",
    "sample",
    "aggregate",
]

_SQRT_PI = math.sqrt(math.pi)


class UnsupportedOperation(ValueError):
    pass


class Family(str, Enum):
    UNIFORM = "uniform"
    PARETO = "pareto"
    EXPONENTIAL = "exponential"
    HALF_GAUSSIAN = "half_gaussian"
    FIXED = "fixed"

    @classmethod
    def parse(cls, name: str) -> "Family":
        key = name.strip().lower().replace("-", "_").replace(" ", "_")
        aliases = {"halfgaussian": "half_gaussian", "half_normal": "half_gaussian",
                   "halfnormal": "half_gaussian"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown distribution family {name!r}") from None


@dataclass(frozen=True)
class QueryVolumeDistribution:
    family: Family
    mean: float
    alpha: float | None = None

    def __post_init__(self):
        family = self.family if isinstance(self.family, Family) else Family.parse(self.family)
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "mean", float(self.mean))
        if not (self.mean > 0 and math.isfinite(self.mean)):
            raise ValueError(f"mean volume must be positive and finite, got {self.mean!r}")
        if family is Family.PARETO:
            if self.alpha is None or not self.alpha > 2:
                raise ValueError(f"Pareto shape must be > 2, got {self.alpha!r}")
            object.__setattr__(self, "alpha", float(self.alpha))
        elif self.alpha is not None:
            raise ValueError(f"shape parameter only applies to Pareto, not {family.value}")

    @classmethod
    def uniform(cls, mean):
        return cls(Family.UNIFORM, mean)

    @classmethod
    def pareto(cls, mean, alpha):
        return cls(Family.PARETO, mean, alpha)

    @classmethod
    def exponential(cls, mean):
        return cls(Family.EXPONENTIAL, mean)

    @classmethod
    def half_gaussian(cls, mean):
        return cls(Family.HALF_GAUSSIAN, mean)

    @classmethod
    def fixed(cls, mean):
        return cls(Family.FIXED, mean)

    @property
    def scale(self) -> float:
        """Pareto scale ``v`` (lower end of the support)."""
        if self.family is not Family.PARETO:
            raise UnsupportedOperation("scale is defined for Pareto only")
        return (self.alpha - 1.0) / self.alpha * self.mean

    @property
    def support_min(self) -> float:
        if self.family is Family.PARETO:
            return self.scale
        if self.family is Family.FIXED:
            return self.mean
        return 0.0

    @property
    def support_max(self) -> float:
        if self.family is Family.UNIFORM:
            return 2.0 * self.mean
        if self.family is Family.FIXED:
            return self.mean
        return math.inf

    def with_mean(self, mean: float) -> "QueryVolumeDistribution":
        return replace(self, mean=mean)

    def __str__(self):
        if self.family is Family.PARETO:
            return f"pareto(r={self.mean:g}, alpha={self.alpha:g})"
        return f"{self.family.value}(r={self.mean:g})"


def second_moment(d: QueryVolumeDistribution) -> float:
    r = d.mean
    if d.family is Family.UNIFORM:
        return 4.0 * r * r / 3.0
    if d.family is Family.PARETO:
        v, a = d.scale, d.alpha
        return a * v * v / (a - 2.0)
    if d.family is Family.EXPONENTIAL:
        return 2.0 * r * r
    if d.family is Family.HALF_GAUSSIAN:
        return 0.5 * math.pi * r * r
    return r * r


def pdf(d: QueryVolumeDistribution, psi):
    """Probability density (1/bits). Scalar or array ``psi``."""
    x = np.asarray(psi, dtype=float)
    r = d.mean
    if d.family is Family.FIXED:
        raise UnsupportedOperation("the fixed-volume family has no density")
    if d.family is Family.UNIFORM:
        out = np.where((x >= 0) & (x <= 2 * r), 0.5 / r, 0.0)
    elif d.family is Family.PARETO:
        v, a = d.scale, d.alpha
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(x >= v, a / v * (v / np.maximum(x, v)) ** (a + 1.0), 0.0)
    elif d.family is Family.EXPONENTIAL:
        out = np.where(x >= 0, np.exp(-np.maximum(x, 0.0) / r) / r, 0.0)
    else:
        out = np.where(x >= 0, 2.0 / (math.pi * r) * np.exp(-x * x / (math.pi * r * r)), 0.0)
    return float(out) if out.ndim == 0 else out


def cdf(d: QueryVolumeDistribution, psi):
    x = np.asarray(psi, dtype=float)
    r = d.mean
    if d.family is Family.UNIFORM:
        out = np.clip(x / (2 * r), 0.0, 1.0)
    elif d.family is Family.PARETO:
        v, a = d.scale, d.alpha
        out = np.where(x >= v, 1.0 - (v / np.maximum(x, v)) ** a, 0.0)
    elif d.family is Family.EXPONENTIAL:
        out = np.where(x >= 0, -np.expm1(-np.maximum(x, 0.0) / r), 0.0)
    elif d.family is Family.HALF_GAUSSIAN:
        out = np.where(x >= 0, erf(np.maximum(x, 0.0) / (_SQRT_PI * r)), 0.0)
    else:
        out = np.where(x >= r, 1.0, 0.0)
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


def quantile(d: QueryVolumeDistribution, q):
    """Inverse CDF on ``(0, 1)``.

    The fixed family is degenerate: every ``q`` maps to the mean.
    """
    qa = np.asarray(q, dtype=float)
    if np.any(~((qa > 0.0) & (qa < 1.0))):
        raise ValueError("quantile level must lie in (0, 1)")
    r = d.mean
    if d.family is Family.UNIFORM:
        out = 2.0 * r * qa
    elif d.family is Family.PARETO:
        out = d.scale * (1.0 - qa) ** (-1.0 / d.alpha)
    elif d.family is Family.EXPONENTIAL:
        out = -r * np.log1p(-qa)
    elif d.family is Family.HALF_GAUSSIAN:
        out = _SQRT_PI * r * np.asarray(erf_inv(qa))
    else:
        out = np.full_like(qa, r)
    return float(out) if out.ndim == 0 else out


def lower_partial_moment(d: QueryVolumeDistribution, c: float) -> float:
    """``L(c)``: expected shortfall of the volume below ``c`` (bits)."""
    c = float(c)
    if c < 0:
        raise ValueError("threshold must be >= 0")
    r = d.mean
    f = d.family
    if f is Family.UNIFORM:
        return c * c / (4.0 * r) if c <= 2.0 * r else c - r
    if f is Family.PARETO:
        v, a = d.scale, d.alpha
        if c <= v:
            return 0.0
        return c - r + (v / c) ** (a - 1.0) * v / (a - 1.0)
    if f is Family.EXPONENTIAL:
        # c - r + r e^{-c/r}, written to avoid cancellation for small c.
        return r * (math.expm1(-c / r) + c / r)
    if f is Family.HALF_GAUSSIAN:
        z = c / (_SQRT_PI * r)
        return c * math.erf(z) + r * math.expm1(-z * z)
    return max(0.0, c - r)


def upper_partial_moment(d: QueryVolumeDistribution, c: float) -> float:
    """``U1(c)``: expected excess of the volume above ``c`` (bits)."""
    c = float(c)
    if c < 0:
        raise ValueError("threshold must be >= 0")
    r = d.mean
    f = d.family
    if f is Family.UNIFORM:
        return (2.0 * r - c) ** 2 / (4.0 * r) if c <= 2.0 * r else 0.0
    if f is Family.PARETO:
        v, a = d.scale, d.alpha
        if c <= v:
            return r - c
        return (v / c) ** (a - 1.0) * v / (a - 1.0)
    if f is Family.EXPONENTIAL:
        return r * math.exp(-c / r)
    if f is Family.HALF_GAUSSIAN:
        z = c / (_SQRT_PI * r)
        return r * math.exp(-z * z) - c * math.erfc(z)
    return max(0.0, r - c)


def upper_sq_partial_moment(d: QueryVolumeDistribution, c: float) -> float:
    """``U2(c)``: expected squared excess above ``c`` (bits^2)."""
    c = float(c)
    if c < 0:
        raise ValueError("threshold must be >= 0")
    r = d.mean
    f = d.family
    if f is Family.UNIFORM:
        return (2.0 * r - c) ** 3 / (6.0 * r) if c <= 2.0 * r else 0.0
    if f is Family.PARETO:
        v, a = d.scale, d.alpha
        if c <= v:
            # E[(X - c)^2] = Var + (r - c)^2 when the whole support lies above c
            var = second_moment(d) - r * r
            return var + (r - c) ** 2
        return 2.0 * v ** a * c ** (2.0 - a) / ((a - 1.0) * (a - 2.0))
    if f is Family.EXPONENTIAL:
        return 2.0 * r * r * math.exp(-c / r)
    if f is Family.HALF_GAUSSIAN:
        z = c / (_SQRT_PI * r)
        return (c * c + 0.5 * math.pi * r * r) * erfc(z) - r * c * math.exp(-z * z)
    return (r - c) ** 2 if c <= r else 0.0


# -- sampling ---------------------------------------------------------------

INVERSE = "inverse-transform"
REJECTION = "rejection"
SAMPLER_MODES = (INVERSE, REJECTION)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample(d: QueryVolumeDistribution, rng_seed, n: int, mode: str = INVERSE) -> np.ndarray:
    """Draw ``n`` volumes. Deterministic for a fixed integer seed.

    ``mode="rejection"`` draws through accept/reject against a dominating
    proposal instead of the inverse CDF; both give the same law.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    if mode not in SAMPLER_MODES:
        raise ValueError(f"unknown sampler mode {mode!r}")
    if d.family is Family.FIXED:
        return np.full(n, d.mean)
    rng = _rng(rng_seed)
    if mode == INVERSE:
        u = rng.random(n)
        # map [0, 1) onto (0, 1) so the quantile never sees 0
        u = np.where(u == 0.0, 0.5 * np.finfo(float).tiny, u)
        return quantile(d, u)
    return _rejection(d, rng, n)


def _rejection(d: QueryVolumeDistribution, rng: np.random.Generator, n: int) -> np.ndarray:
    """Accept/reject with a family-specific envelope ``M * g(x) >= f(x)``."""
    r = d.mean
    out = np.empty(0)
    while out.size < n:
        m = max(64, int(1.6 * (n - out.size)) + 16)
        if d.family is Family.UNIFORM:
            x = 2.0 * r * rng.random(m)
            accept = np.ones(m, dtype=bool)
        elif d.family is Family.EXPONENTIAL:
            # proposal: exponential with half the rate, M = 2
            x = rng.exponential(2.0 * r, m)
            accept = rng.random(m) <= np.exp(-0.5 * x / r)
        elif d.family is Family.HALF_GAUSSIAN:
            # proposal: exponential with rate 1/sigma, M = sqrt(2e/pi)
            sigma = r * math.sqrt(0.5 * math.pi)
            x = rng.exponential(sigma, m)
            accept = rng.random(m) <= np.exp(-0.5 * (x / sigma - 1.0) ** 2)
        else:
            # proposal: Pareto with the same scale and half the shape, M = 2
            v, a = d.scale, d.alpha
            x = v * (1.0 - rng.random(m)) ** (-2.0 / a)
            accept = rng.random(m) <= (v / x) ** (0.5 * a)
        out = np.concatenate([out, x[accept]])
    return out[:n]


def aggregate(zone_dists: Sequence[tuple[QueryVolumeDistribution, float]],
              mode: str = "scaled", rng_seed=None, n_samples: int = 0,
              sampler_mode: str = INVERSE, alpha: float | None = None):
    """Aggregate the volumes of ``n_a`` devices from each zone.

    ``mode="scaled"`` returns a single distribution of the zones' family with
    mean ``r_tot = sum n_a r_a``. Pareto zones with different shapes need an
    explicit aggregate ``alpha``. ``mode="convolved"`` returns ``n_samples``
    Monte Carlo draws of the sum of independent per-device volumes.
    """
    if not zone_dists:
        raise ValueError("at least one zone is required")
    for _, count in zone_dists:
        if not count >= 1:
            raise ValueError("device counts must be >= 1")
    if mode == "scaled":
        families = {d.family for d, _ in zone_dists}
        if len(families) != 1:
            raise UnsupportedOperation("scaled aggregation needs a single family across zones")
        family = families.pop()
        r_tot = math.fsum(d.mean * n for d, n in zone_dists)
        if family is Family.PARETO:
            if alpha is None:
                shapes = {d.alpha for d, _ in zone_dists}
                if len(shapes) != 1:
                    raise UnsupportedOperation("Pareto zones with different shapes need an aggregate alpha")
                alpha = shapes.pop()
            return QueryVolumeDistribution(family, r_tot, alpha)
        return QueryVolumeDistribution(family, r_tot)
    if mode == "convolved":
        if n_samples < 1:
            raise ValueError("n_samples must be >= 1 for convolved aggregation")
        rng = _rng(rng_seed)
        total = np.zeros(n_samples)
        for d, count in zone_dists:
            whole = int(count)
            frac = float(count) - whole
            for _ in range(whole):
                total += sample(d, rng, n_samples, sampler_mode)
            if frac > 0:
                # fractional device: one device whose volume is scaled down
                total += frac * sample(d, rng, n_samples, sampler_mode)
        return total
    raise ValueError(f"unknown aggregation mode {mode!r}")
