"""Device energy model: expected energy, one-sided variation, and the
primary (minimise variation under an energy budget) and dual (minimise
energy under a variation budget) threshold problems.

Per monitoring interval, with mean volume ``r`` and activation threshold
``c_e`` (a fraction of ``r``)::

    E_exp(c_e) = g_e r + i_e L(c_e r)
    E_var(c_e) = g_e^2 U2(c_e r)

``E_exp`` is nondecreasing and ``E_var`` nonincreasing in ``c_e``, so both
problems are solved by driving their constraint to equality.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

from . import distributions as dist
from .distributions import Family, QueryVolumeDistribution
from .numerics import Tolerance, erf, erfc, find_root, lambert_w0

__all__ = [
    "EnergyParams",
    "EnergyConstraints",
    "DeviceProfile",
    "InfeasibleBudget",
    "expected_energy",
    "energy_variation",
    "expected_energy_generic",
    "energy_variation_generic",
    "solve_primary",
    "solve_dual",
]

_SQRT_PI = math.sqrt(math.pi)
_SOLVE_TOL = Tolerance(rel=1e-14, abs=0.0, max_iter=4000)


class InfeasibleBudget(ValueError):
    """The requested energy budget cannot be met by any threshold."""


class ThresholdRangeWarning(UserWarning):
    """Threshold outside the range where the model is physically meaningful."""


@dataclass(frozen=True)
class EnergyParams:
    g_e: float            # J/b, producing and transmitting a query bit
    i_e: float            # J/b, idle time equivalent to one query bit
    c_e: float = 0.0      # activation threshold, fraction of the mean volume

    def __post_init__(self):
        if not self.g_e > 0:
            raise ValueError("g_e must be > 0")
        if not self.i_e >= 0:
            raise ValueError("i_e must be >= 0")
        if not self.c_e >= 0:
            raise ValueError("c_e must be >= 0")

    def with_threshold(self, c_e: float) -> "EnergyParams":
        return replace(self, c_e=float(c_e))


@dataclass(frozen=True)
class EnergyConstraints:
    e_max_exp: float | None = None   # J per interval
    e_max_var: float | None = None   # J^2 per interval

    def __post_init__(self):
        for name in ("e_max_exp", "e_max_var"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValueError(f"{name} must be > 0")


@dataclass(frozen=True)
class DeviceProfile:
    dist: QueryVolumeDistribution
    T: float = 60.0   # seconds; reporting only

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("monitoring interval T must be > 0")


def _as_dist(d) -> QueryVolumeDistribution:
    return d.dist if isinstance(d, DeviceProfile) else d


def expected_energy_generic(p: EnergyParams, d) -> float:
    q = _as_dist(d)
    r = q.mean
    return p.g_e * r + p.i_e * dist.lower_partial_moment(q, p.c_e * r)


def energy_variation_generic(p: EnergyParams, d) -> float:
    q = _as_dist(d)
    return p.g_e ** 2 * dist.upper_sq_partial_moment(q, p.c_e * q.mean)


def expected_energy(p: EnergyParams, d) -> float:
    """Expected energy per monitoring interval (J), family closed form."""
    q = _as_dist(d)
    g, i, c, r = p.g_e, p.i_e, p.c_e, q.mean
    f = q.family
    if f is Family.UNIFORM:
        if c > 2.0:
            warnings.warn("c_e > 2 under Uniform volumes: device is always idle",
                          ThresholdRangeWarning, stacklevel=2)
            return expected_energy_generic(p, q)
        return (g + i * c * c / 4.0) * r
    if f is Family.PARETO:
        a = q.alpha
        if c < (a - 1.0) / a:
            return g * r
        idle = math.exp((a - 1.0) * math.log(a - 1.0) + (1.0 - a) * math.log(c) - a * math.log(a))
        return (g + i * (idle + c - 1.0)) * r
    if f is Family.EXPONENTIAL:
        return (g + i * (c + math.expm1(-c))) * r
    if f is Family.HALF_GAUSSIAN:
        return (g + i * c * erf(c / _SQRT_PI) + i * math.expm1(-c * c / math.pi)) * r
    return (g + i * max(0.0, c - 1.0)) * r


def energy_variation(p: EnergyParams, d) -> float:
    """One-sided energy variation per monitoring interval (J^2)."""
    q = _as_dist(d)
    g, c, r = p.g_e, p.c_e, q.mean
    f = q.family
    if f is Family.UNIFORM:
        if c > 2.0:
            warnings.warn("c_e > 2 under Uniform volumes: device is always idle",
                          ThresholdRangeWarning, stacklevel=2)
            return energy_variation_generic(p, q)
        return g * g * (2.0 - c) ** 3 / 6.0 * r * r
    if f is Family.PARETO:
        a = q.alpha
        if c < (a - 1.0) / a:
            return energy_variation_generic(p, q)
        coef = math.exp((a - 1.0) * math.log(a - 1.0) + (2.0 - a) * math.log(c) - a * math.log(a))
        return 2.0 * g * g * coef / (a - 2.0) * r * r
    if f is Family.EXPONENTIAL:
        return 2.0 * g * g * math.exp(-c) * r * r
    if f is Family.HALF_GAUSSIAN:
        return 0.5 * g * g * ((2.0 * c * c + math.pi) * erfc(c / _SQRT_PI)
                              - 2.0 * c * math.exp(-c * c / math.pi)) * r * r
    return g * g * (1.0 - c) ** 2 * r * r if c <= 1.0 else 0.0


def solve_primary(p_base: EnergyParams, d, e_max_exp: float) -> float:
    """Largest ``c_e`` with ``E_exp(c_e) <= e_max_exp``; it minimises ``E_var``."""
    q = _as_dist(d)
    g, i, r = p_base.g_e, p_base.i_e, q.mean
    e_max_exp = float(e_max_exp)
    floor = g * r
    if not e_max_exp > floor:
        raise InfeasibleBudget(
            f"energy budget {e_max_exp:g} J does not cover active energy g_e*r = {floor:g} J")
    if i == 0:
        raise InfeasibleBudget("idle rate i_e = 0: every threshold meets the budget, problem is unbounded")
    excess = (e_max_exp - floor) / (i * r)
    f = q.family
    if f is Family.UNIFORM:
        if e_max_exp >= (g + i) * r:
            raise InfeasibleBudget(
                f"energy budget {e_max_exp:g} J is at or above (g_e+i_e)*r = {(g + i) * r:g} J; "
                "Uniform thresholds are limited to c_e < 2")
        return 2.0 * math.sqrt(excess)
    if f is Family.EXPONENTIAL:
        k = excess + 1.0
        return lambert_w0(-math.exp(-k)) + k
    if f is Family.FIXED:
        return 1.0 + excess

    def gap(c):
        return expected_energy(p_base.with_threshold(c), q) - e_max_exp

    lo = (q.alpha - 1.0) / q.alpha if f is Family.PARETO else 0.0
    # L(t) >= t - r, so E_exp(c) >= g r + i (c - 1) r: this bound brackets the root
    hi = 1.0 + excess
    return find_root(gap, lo, max(hi, lo), _SOLVE_TOL)


def solve_dual(p_base: EnergyParams, d, e_max_var: float) -> float:
    """Smallest ``c_e`` with ``E_var(c_e) <= e_max_var``; it minimises ``E_exp``."""
    q = _as_dist(d)
    g, r = p_base.g_e, q.mean
    e_max_var = float(e_max_var)
    if not e_max_var > 0:
        raise ValueError("e_max_var must be > 0")
    if e_max_var >= g * g * dist.second_moment(q):
        return 0.0
    f = q.family
    if f is Family.UNIFORM:
        return 2.0 - (6.0 * e_max_var / (g * g * r * r)) ** (1.0 / 3.0)
    if f is Family.EXPONENTIAL:
        return math.log(2.0 * g * g * r * r / e_max_var)
    if f is Family.FIXED:
        return 1.0 - math.sqrt(e_max_var) / (g * r)
    if f is Family.PARETO:
        a = q.alpha
        c = math.exp((math.log(a) * a + math.log(a - 2.0) + math.log(e_max_var)
                      - math.log(2.0 * g * g) - (a - 1.0) * math.log(a - 1.0)
                      - 2.0 * math.log(r)) / (2.0 - a))
        if c >= (a - 1.0) / a:
            return c
        # threshold below the support: U2 = Var + (r - t)^2
        var = dist.second_moment(q) - r * r
        return (r - math.sqrt(e_max_var / (g * g) - var)) / r

    def gap(c):
        return energy_variation(p_base.with_threshold(c), q) - e_max_var

    hi = 1.0
    while gap(hi) > 0:
        hi *= 2.0
    return find_root(gap, 0.0, hi, _SOLVE_TOL)
