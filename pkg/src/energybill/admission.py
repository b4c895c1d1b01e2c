"""Aggregator planning: is a target mean bill reachable under the volume cap,
and how many devices per activity zone does it admit?

With the optimal quota the minimum bill is ``u * r_tot`` for a per-bit unit
cost ``u`` that depends only on the rates and the aggregate family. Setting
it equal to the target ``b_mean`` fixes ``r_tot``; proportional fairness
then gives every zone the same volume share ``r_tot / A``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import distributions as dist
from .billing import BillingParams, min_billing
from .distributions import Family, QueryVolumeDistribution
from .numerics import Tolerance, find_root

__all__ = [
    "ActivityZone",
    "AggregatorScenario",
    "AdmissionPlan",
    "InfeasibleScenario",
    "unit_min_cost",
    "aggregate_distribution",
    "check_feasibility",
    "plan_devices",
    "evaluate_counts",
    "mc_min_billing",
]

SCALED = "scaled"
CONVOLVED = "convolved"
_REL = 1e-9


class InfeasibleScenario(ValueError):
    pass


@dataclass(frozen=True)
class ActivityZone:
    dist: QueryVolumeDistribution
    label: str = ""
    count: float | None = None   # given device count, if fixed a priori


@dataclass(frozen=True)
class AggregatorScenario:
    zones: Sequence[ActivityZone]
    v_max: float                 # bits per interval
    b_mean: float                # $ per interval
    billing: BillingParams
    T: float = 600.0             # seconds; reporting only
    aggregate_mode: str = SCALED
    aggregate_alpha: float | None = None   # Pareto shape of the aggregate

    def __post_init__(self):
        if len(self.zones) < 1:
            raise ValueError("a scenario needs at least one activity zone")
        if not self.v_max > 0:
            raise ValueError("v_max must be > 0")
        if not self.b_mean > 0:
            raise ValueError("b_mean must be > 0")
        if not self.T > 0:
            raise ValueError("T must be > 0")
        if self.aggregate_mode not in (SCALED, CONVOLVED):
            raise ValueError(f"unknown aggregate mode {self.aggregate_mode!r}")

    @property
    def A(self) -> int:
        return len(self.zones)

    def aggregate_family(self) -> tuple[Family, float | None]:
        families = {z.dist.family for z in self.zones}
        if len(families) != 1:
            raise dist.UnsupportedOperation("zones mix distribution families; use the convolved mode")
        family = families.pop()
        alpha = None
        if family is Family.PARETO:
            alpha = self.aggregate_alpha
            if alpha is None:
                shapes = {z.dist.alpha for z in self.zones}
                if len(shapes) != 1:
                    raise dist.UnsupportedOperation(
                        "Pareto zones with different shapes need aggregator.alpha")
                alpha = shapes.pop()
        return family, alpha


@dataclass
class AdmissionPlan:
    counts: list[float]
    r_tot: float
    feasible: bool
    binding_constraint: str               # "billing-target", "volume-cap" or "both"
    integer_counts: list[int] = field(default_factory=list)
    integer_r_tot: float = 0.0
    integer_billing: float = 0.0
    min_billing: float = 0.0
    billing_ci: tuple[float, float] | None = None   # Monte Carlo mode only


def unit_min_cost(b: BillingParams, family, shape: float | None = None) -> float:
    """Minimum expected bill per aggregate bit ($/b) at the optimal quota."""
    family = family if isinstance(family, Family) else Family.parse(family)
    return min_billing(b, QueryVolumeDistribution(family, 1.0, shape))


def aggregate_distribution(s: AggregatorScenario, r_tot: float) -> QueryVolumeDistribution:
    family, alpha = s.aggregate_family()
    return QueryVolumeDistribution(family, r_tot, alpha)


def check_feasibility(s: AggregatorScenario, *, seed: int = 0, n_samples: int = 20000):
    """``(feasible, margin)`` with ``margin = v_max * u - b_mean`` in $."""
    if s.aggregate_mode == CONVOLVED:
        cap_cost = mc_min_billing(s, s.v_max, seed=seed, n_samples=n_samples)[0]
    else:
        family, alpha = s.aggregate_family()
        cap_cost = s.v_max * unit_min_cost(s.billing, family, alpha)
    margin = cap_cost - s.b_mean
    return margin >= -_REL * s.b_mean, margin


def _proportional_counts(s: AggregatorScenario, r_tot: float) -> list[float]:
    return [r_tot / (s.A * z.dist.mean) for z in s.zones]


def plan_devices(s: AggregatorScenario, *, seed: int = 0, n_samples: int = 20000) -> AdmissionPlan:
    """Proportionally fair device counts whose minimum bill equals ``b_mean``."""
    feasible, margin = check_feasibility(s, seed=seed, n_samples=n_samples)
    if not feasible:
        raise InfeasibleScenario(
            f"b_mean={s.b_mean:g} $ needs more volume than v_max={s.v_max:g} b allows "
            f"(shortfall {-margin:g} $)")
    at_cap = abs(margin) <= _REL * s.b_mean
    ci = None
    if s.aggregate_mode == CONVOLVED:
        if at_cap:
            r_tot = s.v_max
        else:
            r_tot = find_root(lambda x: mc_min_billing(s, x, seed=seed, n_samples=n_samples)[0] - s.b_mean,
                              0.0, s.v_max, Tolerance(rel=1e-10, abs=0.0, max_iter=200))
        best, se = mc_min_billing(s, r_tot, seed=seed, n_samples=n_samples)
        ci = (best - 1.96 * se, best + 1.96 * se)
    else:
        family, alpha = s.aggregate_family()
        unit = unit_min_cost(s.billing, family, alpha)
        r_tot = s.v_max if at_cap else s.b_mean / unit
        best = unit * r_tot
    counts = _proportional_counts(s, r_tot)
    if at_cap:
        # exact v_max / (A r_a)
        counts = [s.v_max / (s.A * z.dist.mean) for z in s.zones]
    plan = AdmissionPlan(counts=counts, r_tot=r_tot, feasible=True,
                         binding_constraint="both" if at_cap else "billing-target",
                         min_billing=best, billing_ci=ci)
    _fill_integer(s, plan)
    return plan


def evaluate_counts(s: AggregatorScenario, counts: Sequence[float] | None = None, *,
                    seed: int = 0, n_samples: int = 20000) -> AdmissionPlan:
    """Plan for device counts fixed a priori (zone ``count`` fields by default)."""
    if counts is None:
        counts = [z.count for z in s.zones]
        if any(c is None for c in counts):
            raise ValueError("every zone needs a count to evaluate given counts")
    counts = [float(c) for c in counts]
    r_tot = math.fsum(n * z.dist.mean for n, z in zip(counts, s.zones))
    ci = None
    if s.aggregate_mode == CONVOLVED:
        best, se = _mc_min_billing_counts(s, counts, seed=seed, n_samples=n_samples)
        ci = (best - 1.96 * se, best + 1.96 * se)
    else:
        best = min_billing(s.billing, aggregate_distribution(s, r_tot))
    over_cap = r_tot > s.v_max * (1 + _REL)
    over_budget = best > s.b_mean * (1 + _REL)
    if over_cap and over_budget:
        binding = "both"
    elif over_cap or r_tot >= s.v_max * (1 - _REL):
        binding = "volume-cap"
    else:
        binding = "billing-target"
    plan = AdmissionPlan(counts=counts, r_tot=r_tot, feasible=not (over_cap or over_budget),
                         binding_constraint=binding, min_billing=best, billing_ci=ci)
    _fill_integer(s, plan)
    return plan


def _fill_integer(s: AggregatorScenario, plan: AdmissionPlan) -> None:
    ints = [int(math.floor(n + 1e-9)) for n in plan.counts]
    plan.integer_counts = ints
    plan.integer_r_tot = math.fsum(n * z.dist.mean for n, z in zip(ints, s.zones))
    if plan.integer_r_tot == 0:
        plan.integer_billing = 0.0
    elif s.aggregate_mode == CONVOLVED:
        plan.integer_billing = plan.min_billing * plan.integer_r_tot / plan.r_tot if plan.r_tot else 0.0
    else:
        plan.integer_billing = min_billing(s.billing, aggregate_distribution(s, plan.integer_r_tot))


# -- Monte Carlo fallback for convolved aggregates -------------------------

def _mc_min_billing_counts(s: AggregatorScenario, counts, *, seed: int, n_samples: int):
    pairs = [(z.dist, n) for z, n in zip(s.zones, counts) if n > 0]
    if not pairs:
        return 0.0, 0.0
    rng = np.random.default_rng(seed)
    total = np.zeros(n_samples)
    for d, n in pairs:
        whole, frac = int(n), n - int(n)
        for _ in range(whole):
            total += dist.sample(d, rng, n_samples)
        if frac > 0:
            total += frac * dist.sample(d, rng, n_samples)
    b = s.billing
    quota = float(np.quantile(total, b.critical_ratio)) if b.p_b > 0 else 0.0
    bill = b.g_b * total + b.i_b * np.maximum(0.0, quota - total) + b.p_b * np.maximum(0.0, total - quota)
    return float(bill.mean()), float(bill.std(ddof=1) / math.sqrt(n_samples))


def mc_min_billing(s: AggregatorScenario, r_tot: float, *, seed: int = 0, n_samples: int = 20000):
    """Monte Carlo minimum bill ``(mean, stderr)`` of a convolved aggregate
    carrying ``r_tot`` bits in proportionally fair shares.

    Common random numbers (same ``seed``) keep the estimate smooth in
    ``r_tot`` so it can be bisected.
    """
    if r_tot <= 0:
        return 0.0, 0.0
    return _mc_min_billing_counts(s, _proportional_counts(s, r_tot), seed=seed, n_samples=n_samples)
