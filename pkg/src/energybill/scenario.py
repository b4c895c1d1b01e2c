"""Scenario files.

A scenario is an INI document (read with :mod:`configparser`). Sections and
keys, all in base units::

    [energy]            g_e (J/b), i_e (J/b), c_e (optional threshold, fraction of r)
    [constraints]       e_max_exp (J) and/or e_max_var (J^2); optional section
    [billing]           g_b, i_b, p_b ($/b), b_mean ($, optional), c_b (bits, optional)
    [aggregator]        v_max (bits), T (s), aggregate_mode (scaled | convolved),
                        alpha (Pareto shape of the aggregate, optional)
    [zone <label>]      family, r (bits), alpha (Pareto only), count (optional)
    [sim]               n_intervals, seed, sampler_mode, instances_idle,
                        instances_active; optional section

Zone sections keep their file order. Unknown sections or keys are errors.
"""
from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field
from pathlib import Path

from .admission import ActivityZone, AggregatorScenario
from .billing import BillingParams
from .distributions import Family, QueryVolumeDistribution
from .energy import EnergyConstraints, EnergyParams
from .simulator import SimConfig

__all__ = ["ScenarioError", "Scenario", "load", "loads", "dumps"]


class ScenarioError(ValueError):
    pass


_KEYS = {
    "energy": {"g_e": True, "i_e": True, "c_e": False},
    "constraints": {"e_max_exp": False, "e_max_var": False},
    "billing": {"g_b": True, "i_b": True, "p_b": True, "b_mean": False, "c_b": False},
    "aggregator": {"v_max": True, "T": True, "aggregate_mode": False, "alpha": False},
    "sim": {"n_intervals": False, "seed": False, "sampler_mode": False,
            "instances_idle": False, "instances_active": False},
    "zone": {"family": True, "r": True, "alpha": False, "count": False},
}
_REQUIRED_SECTIONS = ("energy", "billing", "aggregator")


@dataclass
class Scenario:
    energy: EnergyParams
    billing: BillingParams
    v_max: float
    T: float
    zones: list[ActivityZone]
    constraints: EnergyConstraints = field(default_factory=EnergyConstraints)
    b_mean: float | None = None
    c_e_given: bool = False
    aggregate_mode: str = "scaled"
    aggregate_alpha: float | None = None
    sim: SimConfig = field(default_factory=SimConfig)

    @property
    def counts_given(self) -> bool:
        return all(z.count is not None for z in self.zones)

    def aggregator(self, b_mean: float | None = None) -> AggregatorScenario:
        target = self.b_mean if b_mean is None else b_mean
        if target is None:
            raise ScenarioError("billing.b_mean is required for admission planning")
        return AggregatorScenario(zones=self.zones, v_max=self.v_max, b_mean=target,
                                  billing=self.billing, T=self.T,
                                  aggregate_mode=self.aggregate_mode,
                                  aggregate_alpha=self.aggregate_alpha)


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    cp.optionxform = str   # keys are case-sensitive (T)
    return cp


def _float(section, key, raw):
    try:
        return float(raw)
    except ValueError:
        raise ScenarioError(f"[{section}] {key}: expected a number, got {raw!r}") from None


def _int(section, key, raw):
    try:
        return int(raw)
    except ValueError:
        raise ScenarioError(f"[{section}] {key}: expected an integer, got {raw!r}") from None


def _check_keys(name, kind, items):
    allowed = _KEYS[kind]
    for key in items:
        if key not in allowed:
            raise ScenarioError(f"[{name}] unknown key {key!r}")
    for key, required in allowed.items():
        if required and key not in items:
            raise ScenarioError(f"[{name}] missing required key {key!r}")


def loads(text: str) -> Scenario:
    cp = _parser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ScenarioError(f"malformed scenario: {exc}") from None

    zones_raw = []
    sections = {}
    for name in cp.sections():
        if name.startswith("zone"):
            label = name[4:].strip()
            if not label:
                raise ScenarioError("zone sections need a label: [zone <label>]")
            items = dict(cp.items(name))
            _check_keys(name, "zone", items)
            zones_raw.append((label, items))
        elif name in _KEYS:
            items = dict(cp.items(name))
            _check_keys(name, name, items)
            sections[name] = items
        else:
            raise ScenarioError(f"unknown section [{name}]")
    for name in _REQUIRED_SECTIONS:
        if name not in sections:
            raise ScenarioError(f"missing section [{name}]")
    if not zones_raw:
        raise ScenarioError("at least one [zone <label>] section is required")

    try:
        e = sections["energy"]
        c_e = e.get("c_e")
        energy = EnergyParams(_float("energy", "g_e", e["g_e"]), _float("energy", "i_e", e["i_e"]),
                              _float("energy", "c_e", c_e) if c_e is not None else 0.0)

        c = sections.get("constraints", {})
        constraints = EnergyConstraints(
            _float("constraints", "e_max_exp", c["e_max_exp"]) if "e_max_exp" in c else None,
            _float("constraints", "e_max_var", c["e_max_var"]) if "e_max_var" in c else None)

        b = sections["billing"]
        billing = BillingParams(_float("billing", "g_b", b["g_b"]), _float("billing", "i_b", b["i_b"]),
                                _float("billing", "p_b", b["p_b"]),
                                _float("billing", "c_b", b["c_b"]) if "c_b" in b else None)
        b_mean = _float("billing", "b_mean", b["b_mean"]) if "b_mean" in b else None
        if b_mean is not None and not b_mean > 0:
            raise ScenarioError("[billing] b_mean must be > 0")

        a = sections["aggregator"]
        v_max = _float("aggregator", "v_max", a["v_max"])
        T = _float("aggregator", "T", a["T"])
        if not v_max > 0 or not T > 0:
            raise ScenarioError("[aggregator] v_max and T must be > 0")
        mode = a.get("aggregate_mode", "scaled").strip()
        if mode not in ("scaled", "convolved"):
            raise ScenarioError(f"[aggregator] aggregate_mode must be scaled or convolved, got {mode!r}")
        agg_alpha = _float("aggregator", "alpha", a["alpha"]) if "alpha" in a else None

        zones = []
        for label, z in zones_raw:
            family = Family.parse(z["family"])
            alpha = _float(f"zone {label}", "alpha", z["alpha"]) if "alpha" in z else None
            d = QueryVolumeDistribution(family, _float(f"zone {label}", "r", z["r"]), alpha)
            count = _float(f"zone {label}", "count", z["count"]) if "count" in z else None
            if count is not None and count < 0:
                raise ScenarioError(f"[zone {label}] count must be >= 0")
            zones.append(ActivityZone(d, label, count))

        s = sections.get("sim", {})
        defaults = SimConfig()
        sim = SimConfig(
            n_intervals=_int("sim", "n_intervals", s["n_intervals"]) if "n_intervals" in s else defaults.n_intervals,
            seed=_int("sim", "seed", s["seed"]) if "seed" in s else defaults.seed,
            instances_idle=_int("sim", "instances_idle", s["instances_idle"])
            if "instances_idle" in s else defaults.instances_idle,
            instances_active=_int("sim", "instances_active", s["instances_active"])
            if "instances_active" in s else defaults.instances_active,
            sampler_mode=s.get("sampler_mode", defaults.sampler_mode).strip(),
        )
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None

    return Scenario(energy=energy, billing=billing, v_max=v_max, T=T, zones=zones,
                    constraints=constraints, b_mean=b_mean, c_e_given=c_e is not None,
                    aggregate_mode=mode, aggregate_alpha=agg_alpha, sim=sim)


def load(path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from None
    return loads(text)


def dumps(s: Scenario) -> str:
    cp = _parser()
    energy = {"g_e": repr(s.energy.g_e), "i_e": repr(s.energy.i_e)}
    if s.c_e_given:
        energy["c_e"] = repr(s.energy.c_e)
    cp["energy"] = energy
    constraints = {}
    if s.constraints.e_max_exp is not None:
        constraints["e_max_exp"] = repr(s.constraints.e_max_exp)
    if s.constraints.e_max_var is not None:
        constraints["e_max_var"] = repr(s.constraints.e_max_var)
    if constraints:
        cp["constraints"] = constraints
    billing = {"g_b": repr(s.billing.g_b), "i_b": repr(s.billing.i_b), "p_b": repr(s.billing.p_b)}
    if s.b_mean is not None:
        billing["b_mean"] = repr(s.b_mean)
    if s.billing.c_b is not None:
        billing["c_b"] = repr(s.billing.c_b)
    cp["billing"] = billing
    agg = {"v_max": repr(s.v_max), "T": repr(s.T), "aggregate_mode": s.aggregate_mode}
    if s.aggregate_alpha is not None:
        agg["alpha"] = repr(s.aggregate_alpha)
    cp["aggregator"] = agg
    for z in s.zones:
        zone = {"family": z.dist.family.value, "r": repr(z.dist.mean)}
        if z.dist.alpha is not None:
            zone["alpha"] = repr(z.dist.alpha)
        if z.count is not None:
            zone["count"] = repr(z.count)
        cp[f"zone {z.label}"] = zone
    cp["sim"] = {
        "n_intervals": str(s.sim.n_intervals),
        "seed": str(s.sim.seed),
        "sampler_mode": s.sim.sampler_mode,
        "instances_idle": str(s.sim.instances_idle),
        "instances_active": str(s.sim.instances_active),
    }
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
