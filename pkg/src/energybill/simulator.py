"""Monte Carlo emulation of the validation protocol.

Each monitoring interval draws a query volume ``v(t)``. A device transmits
``v(t)`` bits and, when ``v(t)`` falls short of ``c_e * E[Psi]``, spends idle
energy topping up to that point. The aggregator's volume is billed under the
two-level autoscaling rule. Sample means are compared with the analytic
predictions through the coefficient of determination.

Randomness is consumed in fixed blocks of intervals, each block seeded from
``(seed, block index)``, so results do not depend on evaluation order.
Calling a simulator twice with the same config reuses the same draws, which
makes threshold sweeps use common random numbers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import distributions as dist
from .billing import BillingParams
from .distributions import INVERSE, REJECTION, QueryVolumeDistribution
from .energy import DeviceProfile, EnergyParams

__all__ = [
    "SimConfig",
    "EnergyEstimate",
    "BillingEstimate",
    "SweepSeries",
    "draw_volumes",
    "draw_aggregate",
    "simulate_device_energy",
    "simulate_billing",
    "r_squared",
    "sweep",
    "energy_sweep",
    "billing_sweep",
]

BLOCK = 4096


@dataclass(frozen=True)
class SimConfig:
    n_intervals: int = 2000
    seed: int = 0
    instances_idle: int = 3
    instances_active: int = 30
    sampler_mode: str = INVERSE

    def __post_init__(self):
        if self.n_intervals < 1:
            raise ValueError("n_intervals must be >= 1")
        if self.instances_idle < 1 or self.instances_active < 1:
            raise ValueError("instance counts must be >= 1")
        if self.sampler_mode not in (INVERSE, REJECTION):
            raise ValueError(f"unknown sampler mode {self.sampler_mode!r}")


@dataclass(frozen=True)
class EnergyEstimate:
    mean: float
    variation: float
    mean_stderr: float
    variation_stderr: float

    def __iter__(self):
        # unpacks as (mean, variation)
        return iter((self.mean, self.variation))


@dataclass(frozen=True)
class BillingEstimate:
    mean: float
    stderr: float
    active_fraction: float
    mean_instances: float

    def instance_hours(self, T: float) -> float:
        """Expected instance-hours per monitoring interval of ``T`` seconds."""
        return self.mean_instances * T / 3600.0


def _block_rng(seed: int, block: int, stream: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), stream, block]))


def draw_volumes(d: QueryVolumeDistribution, cfg: SimConfig, stream: int = 0) -> np.ndarray:
    """Per-interval volumes for one device (or one scaled aggregate)."""
    n = cfg.n_intervals
    parts = []
    for block, start in enumerate(range(0, n, BLOCK)):
        m = min(BLOCK, n - start)
        parts.append(dist.sample(d, _block_rng(cfg.seed, block, stream), m, cfg.sampler_mode))
    return np.concatenate(parts)


def draw_aggregate(zones: Sequence[tuple[QueryVolumeDistribution, float]], cfg: SimConfig,
                   mode: str = "scaled", alpha: float | None = None) -> np.ndarray:
    """Per-interval aggregate volumes.

    ``scaled`` draws one aggregate of the zones' family; ``convolved`` sums
    independent per-device draws, one random stream per device.
    """
    if mode == "scaled":
        return draw_volumes(dist.aggregate(zones, "scaled", alpha=alpha), cfg)
    if mode != "convolved":
        raise ValueError(f"unknown aggregation mode {mode!r}")
    total = np.zeros(cfg.n_intervals)
    stream = 1
    for d, count in zones:
        whole = int(count)
        frac = float(count) - whole
        for _ in range(whole):
            total += draw_volumes(d, cfg, stream)
            stream += 1
        if frac > 0:
            total += frac * draw_volumes(d, cfg, stream)
            stream += 1
    return total


def _mean(x: np.ndarray) -> float:
    # exactly rounded sum: independent of evaluation order
    return math.fsum(x) / x.size


def _stderr(x: np.ndarray) -> float:
    if x.size < 2:
        return 0.0
    return float(x.std(ddof=1) / math.sqrt(x.size))


def energy_samples(p: EnergyParams, volumes: np.ndarray, mean_volume: float):
    threshold = p.c_e * mean_volume
    energy = p.g_e * volumes + p.i_e * np.maximum(0.0, threshold - volumes)
    excess = np.maximum(0.0, volumes - threshold)
    return energy, p.g_e ** 2 * excess * excess


def simulate_device_energy(p: EnergyParams, d, cfg: SimConfig,
                           volumes: np.ndarray | None = None) -> EnergyEstimate:
    """Sample-mean energy (J) and one-sided variation (J^2) per interval."""
    q = d.dist if isinstance(d, DeviceProfile) else d
    v = draw_volumes(q, cfg) if volumes is None else volumes
    energy, variation = energy_samples(p, v, q.mean)
    return EnergyEstimate(_mean(energy), _mean(variation),
                          _stderr(energy), _stderr(variation))


def simulate_billing(b: BillingParams, zones, cfg: SimConfig, mode: str = "scaled",
                     alpha: float | None = None, volumes: np.ndarray | None = None) -> BillingEstimate:
    """Sample-mean bill ($) per interval at quota ``b.c_b``.

    ``zones`` is a list of ``(distribution, device count)`` pairs or a single
    aggregate distribution.
    """
    if b.c_b is None:
        raise ValueError("simulate_billing needs an explicit quota c_b")
    if volumes is None:
        if isinstance(zones, QueryVolumeDistribution):
            zones = [(zones, 1)]
        volumes = draw_aggregate(zones, cfg, mode, alpha)
    c = b.c_b
    bill = b.g_b * volumes + b.i_b * np.maximum(0.0, c - volumes) + b.p_b * np.maximum(0.0, volumes - c)
    active = volumes > c
    instances = np.where(active, cfg.instances_active, cfg.instances_idle)
    return BillingEstimate(_mean(bill), _stderr(bill), float(active.mean()),
                           _mean(instances))


def r_squared(reference: Sequence[float], predicted: Sequence[float]) -> float:
    """``1 - SS_res / SS_tot`` with ``reference`` as the observed series.

    Returns NaN when the reference series is constant (``SS_tot = 0``).
    """
    y = np.asarray(reference, dtype=float)
    f = np.asarray(predicted, dtype=float)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum((y - f) ** 2))
    if ss_tot == 0.0:
        return math.nan
    return 1.0 - ss_res / ss_tot


@dataclass
class SweepSeries:
    kind: str
    control_values: list[float]
    analytic: list[float]
    simulated: list[float]
    stderr: list[float] = field(default_factory=list)
    r_squared: float = math.nan

    @property
    def r_squared_defined(self) -> bool:
        return not math.isnan(self.r_squared)

    def argmin_simulated(self) -> int:
        return int(np.argmin(self.simulated))


SWEEP_KINDS = ("energy-exp", "energy-var", "billing")


def _pick(kind: str, estimate):
    if isinstance(estimate, EnergyEstimate):
        if kind == "energy-var":
            return estimate.variation, estimate.variation_stderr
        return estimate.mean, estimate.mean_stderr
    if isinstance(estimate, BillingEstimate):
        return estimate.mean, estimate.stderr
    return float(estimate), math.nan


def sweep(kind: str, grid: Sequence[float], analytic_fn: Callable[[float], float],
          simulate_fn: Callable[[float, SimConfig], object], cfg: SimConfig) -> SweepSeries:
    """Evaluate the analytic and simulated paths on ``grid`` and score the fit."""
    if kind not in SWEEP_KINDS:
        raise ValueError(f"unknown sweep kind {kind!r}")
    grid = [float(x) for x in grid]
    if not grid:
        raise ValueError("sweep grid must be nonempty")
    analytic, simulated, errs = [], [], []
    for x in grid:
        analytic.append(float(analytic_fn(x)))
        value, err = _pick(kind, simulate_fn(x, cfg))
        simulated.append(value)
        errs.append(err)
    return SweepSeries(kind, grid, analytic, simulated, errs, r_squared(simulated, analytic))


def energy_sweep(p: EnergyParams, d, grid: Sequence[float], cfg: SimConfig,
                 kind: str = "energy-exp") -> SweepSeries:
    """Threshold sweep of the device energy model (common random numbers)."""
    from .energy import energy_variation, expected_energy

    q = d.dist if isinstance(d, DeviceProfile) else d
    volumes = draw_volumes(q, cfg)
    model = energy_variation if kind == "energy-var" else expected_energy
    return sweep(kind, grid,
                 lambda c: model(p.with_threshold(c), q),
                 lambda c, conf: simulate_device_energy(p.with_threshold(c), q, conf, volumes),
                 cfg)


def billing_sweep(b: BillingParams, zones, grid: Sequence[float], cfg: SimConfig,
                  mode: str = "scaled", alpha: float | None = None) -> SweepSeries:
    """Quota sweep of the billing model; analytic side uses the scaled aggregate."""
    from .billing import expected_billing

    if isinstance(zones, QueryVolumeDistribution):
        zones = [(zones, 1)]
    agg = dist.aggregate(zones, "scaled", alpha=alpha) if mode == "scaled" else None
    if agg is None:
        families = {d.family for d, _ in zones}
        if len(families) == 1:
            agg = dist.aggregate(zones, "scaled", alpha=alpha)
    volumes = draw_aggregate(zones, cfg, mode, alpha)

    def analytic(c):
        return expected_billing(b.with_quota(c), agg) if agg is not None else math.nan

    return sweep("billing", grid, analytic,
                 lambda c, conf: simulate_billing(b.with_quota(c), zones, conf, volumes=volumes),
                 cfg)
