"""Command line interface.

Exit codes: 0 success, 1 bad input (scenario or arguments), 2 infeasible
constraints, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import warnings
from dataclasses import replace

import numpy as np

from . import admission, billing, energy, simulator
from .distributions import UnsupportedOperation
from .numerics import NumericalError
from .scenario import Scenario, ScenarioError, load

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _fmt(x: float) -> str:
    return "nan" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.6g}"


def _write_csv(rows, header, out):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    text = buf.getvalue()
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="", encoding="ascii") as fh:
            fh.write(text)
    return text


def _threshold(s: Scenario, c_e):
    if c_e is not None:
        return c_e
    if s.c_e_given:
        return s.energy.c_e
    raise UsageError("no activation threshold: pass --ce or set energy.c_e")


def _r_tot(s: Scenario, seed: int) -> tuple[float, str]:
    if s.counts_given:
        return math.fsum(z.count * z.dist.mean for z in s.zones), "given counts"
    if s.b_mean is not None:
        return admission.plan_devices(s.aggregator(), seed=seed).r_tot, "planned counts"
    raise UsageError("zones need counts, or billing.b_mean must be set to plan them")


def _agg_dist(s: Scenario, r_tot: float):
    family, alpha = s.aggregator(b_mean=1.0).aggregate_family()
    return admission.QueryVolumeDistribution(family, r_tot, alpha)


def _quota(s: Scenario, c_b, agg) -> tuple[float, str]:
    if c_b is not None:
        return c_b, "given"
    if s.billing.c_b is not None:
        return s.billing.c_b, "scenario"
    return billing.optimal_quota(s.billing, agg), "optimal"


def cmd_analyze(s: Scenario, args) -> int:
    c_e = _threshold(s, args.ce)
    p = s.energy.with_threshold(c_e)
    print(f"activation threshold c_e = {_fmt(c_e)}")
    rows = []
    for z in s.zones:
        e_exp = energy.expected_energy(p, z.dist)
        e_var = energy.energy_variation(p, z.dist)
        print(f"zone {z.label}: {z.dist}  E_exp = {_fmt(e_exp)} J  E_var = {_fmt(e_var)} J^2")
        rows += [("E_exp", z.label, e_exp), ("E_var", z.label, e_var)]
    r_tot, source = _r_tot(s, args.seed)
    agg = _agg_dist(s, r_tot)
    c_b, qsrc = _quota(s, args.cb, agg)
    b_exp = billing.expected_billing(s.billing.with_quota(c_b), agg)
    print(f"r_tot = {_fmt(r_tot)} b ({source})")
    print(f"c_b = {_fmt(c_b)} b ({qsrc})  B_exp = {_fmt(b_exp)} $")
    rows += [("r_tot", "aggregate", r_tot), ("c_b", "aggregate", c_b), ("B_exp", "aggregate", b_exp)]
    if args.out:
        _write_csv(rows, ["quantity", "zone", "value"], args.out)
    return EXIT_OK


def cmd_optimize(s: Scenario, args) -> int:
    cons = s.constraints
    if (cons.e_max_exp is None) == (cons.e_max_var is None):
        raise UsageError("optimize needs exactly one of constraints.e_max_exp / constraints.e_max_var")
    rows = []
    for z in s.zones:
        if cons.e_max_exp is not None:
            c_e = energy.solve_primary(s.energy, z.dist, cons.e_max_exp)
            problem = "primary"
        else:
            c_e = energy.solve_dual(s.energy, z.dist, cons.e_max_var)
            problem = "dual"
        p = s.energy.with_threshold(c_e)
        e_exp, e_var = energy.expected_energy(p, z.dist), energy.energy_variation(p, z.dist)
        print(f"zone {z.label}: {problem} c_e = {_fmt(c_e)}  E_exp = {_fmt(e_exp)} J  E_var = {_fmt(e_var)} J^2")
        rows.append((f"c_e[{z.label}]", c_e))

    agg_s = s.aggregator()
    feasible, margin = admission.check_feasibility(agg_s, seed=args.seed)
    print(f"feasibility: {'feasible' if feasible else 'INFEASIBLE'}  margin = {_fmt(margin)} $")
    rows.append(("margin", margin))
    if not feasible:
        if args.out:
            _write_csv(rows, ["quantity", "value"], args.out)
        return EXIT_INFEASIBLE
    plan = admission.plan_devices(agg_s, seed=args.seed)
    _print_plan(s, plan)
    rows += [("r_tot", plan.r_tot), ("min_billing", plan.min_billing)]
    if s.aggregate_mode == "scaled":
        agg = _agg_dist(s, plan.r_tot)
        c_b = billing.optimal_quota(s.billing, agg)
        print(f"optimal quota c_b = {_fmt(c_b)} b  min B_exp = {_fmt(billing.min_billing(s.billing, agg))} $")
        rows.append(("c_b", c_b))
    rows += [(f"n[{z.label}]", n) for z, n in zip(s.zones, plan.counts)]
    if args.out:
        _write_csv(rows, ["quantity", "value"], args.out)
    return EXIT_OK


def _print_plan(s: Scenario, plan: admission.AdmissionPlan) -> None:
    for z, n, k in zip(s.zones, plan.counts, plan.integer_counts):
        print(f"zone {z.label}: n = {_fmt(n)} (integer {k})")
    print(f"r_tot = {_fmt(plan.r_tot)} b  binding = {plan.binding_constraint}  "
          f"min billing = {_fmt(plan.min_billing)} $")
    if plan.billing_ci is not None:
        lo, hi = plan.billing_ci
        print(f"  Monte Carlo 95% interval: [{_fmt(lo)}, {_fmt(hi)}] $")
    print(f"integer plan: r_tot = {_fmt(plan.integer_r_tot)} b  billing = {_fmt(plan.integer_billing)} $")


def cmd_plan(s: Scenario, args) -> int:
    agg_s = s.aggregator()
    if args.given_counts:
        plan = admission.evaluate_counts(agg_s, seed=args.seed)
        _print_plan(s, plan)
        print(f"feasible = {plan.feasible}")
        return EXIT_OK if plan.feasible else EXIT_INFEASIBLE
    feasible, margin = admission.check_feasibility(agg_s, seed=args.seed)
    print(f"feasibility: {'feasible' if feasible else 'INFEASIBLE'}  margin = {_fmt(margin)} $")
    if not feasible:
        return EXIT_INFEASIBLE
    _print_plan(s, admission.plan_devices(agg_s, seed=args.seed))
    return EXIT_OK


def _zone_pairs(s: Scenario, r_tot: float):
    if s.counts_given:
        return [(z.dist, z.count) for z in s.zones if z.count > 0]
    # proportionally fair counts for the planned volume
    return [(z.dist, r_tot / (len(s.zones) * z.dist.mean)) for z in s.zones]


def cmd_simulate(s: Scenario, args) -> int:
    cfg = s.sim
    c_e = _threshold(s, args.ce)
    p = s.energy.with_threshold(c_e)
    rows = []
    print(f"{'quantity':<22} {'analytic':>13} {'simulated':>13} {'stderr':>12} {'rel.err':>12}")

    def report(name, zone, analytic, sim, se):
        rel = (sim - analytic) / analytic if analytic else math.nan
        print(f"{name + '[' + zone + ']':<22} {_fmt(analytic):>13} {_fmt(sim):>13} {_fmt(se):>12} {_fmt(rel):>12}")
        rows.append((name, zone, analytic, sim, se, rel))

    for z in s.zones:
        est = simulator.simulate_device_energy(p, z.dist, cfg)
        report("E_exp", z.label, energy.expected_energy(p, z.dist), est.mean, est.mean_stderr)
        report("E_var", z.label, energy.energy_variation(p, z.dist), est.variation, est.variation_stderr)

    r_tot, _ = _r_tot(s, args.seed)
    agg = _agg_dist(s, r_tot)
    c_b, qsrc = _quota(s, args.cb, agg)
    pairs = _zone_pairs(s, r_tot)
    est = simulator.simulate_billing(s.billing.with_quota(c_b), pairs, cfg, s.aggregate_mode,
                                     s.aggregate_alpha)
    report("B_exp", "aggregate", billing.expected_billing(s.billing.with_quota(c_b), agg), est.mean, est.stderr)
    print(f"c_b = {_fmt(c_b)} b ({qsrc}); active in {_fmt(100 * est.active_fraction)}% of intervals; "
          f"{_fmt(est.instance_hours(s.T))} instance-hours per interval")
    if args.out:
        _write_csv(rows, ["quantity", "zone", "analytic", "simulated", "stderr", "rel_error"], args.out)
    return EXIT_OK


def cmd_sweep(s: Scenario, args) -> int:
    if args.steps < 1:
        raise UsageError("--steps must be >= 1")
    grid = np.linspace(args.start, args.stop, args.steps)
    cfg = s.sim
    if args.variable == "ce":
        zone = _pick_zone(s, args.zone)
        kind = "energy-var" if args.quantity == "var" else "energy-exp"
        series = simulator.energy_sweep(s.energy, zone.dist, grid, cfg, kind)
    else:
        r_tot, _ = _r_tot(s, args.seed)
        series = simulator.billing_sweep(s.billing, _zone_pairs(s, r_tot), grid, cfg,
                                         s.aggregate_mode, s.aggregate_alpha)
    rows = list(zip(series.control_values, series.analytic, series.simulated, series.stderr))
    rows.append(("r_squared", series.r_squared, "", ""))
    _write_csv(rows, ["control", "analytic", "simulated", "stderr"], args.out)
    if args.out and args.out != "-":
        print(f"wrote {len(grid)} rows to {args.out}; R^2 = {_fmt(series.r_squared)}")
    return EXIT_OK


def _pick_zone(s: Scenario, label):
    if label is None:
        return s.zones[0]
    for z in s.zones:
        if z.label == label:
            return z
    raise UsageError(f"no zone labelled {label!r}")


COMMANDS = {
    "analyze": cmd_analyze,
    "optimize": cmd_optimize,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "plan": cmd_plan,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="energybill",
                     description="IoT device energy and cloud billing coupling models")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--scenario", required=True, help="scenario INI file")
    common.add_argument("--seed", type=int, default=None, help="override sim.seed")
    common.add_argument("--out", default=None, help="CSV output path ('-' for stdout)")

    p = sub.add_parser("analyze", parents=[common], help="evaluate the analytic model")
    p.add_argument("--ce", type=float, default=None, help="activation threshold c_e")
    p.add_argument("--cb", type=float, default=None, help="autoscaling quota c_b (bits)")

    sub.add_parser("optimize", parents=[common], help="solve thresholds, quota and admission plan")

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo vs analytic comparison")
    p.add_argument("--ce", type=float, default=None)
    p.add_argument("--cb", type=float, default=None)

    p = sub.add_parser("sweep", parents=[common], help="sweep c_e or c_b and emit CSV")
    p.add_argument("variable", choices=["ce", "cb"])
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--quantity", choices=["exp", "var"], default="exp",
                   help="energy quantity for ce sweeps")
    p.add_argument("--zone", default=None, help="zone label for ce sweeps (default: first)")

    p = sub.add_parser("plan", parents=[common], help="admission feasibility and device counts")
    p.add_argument("--given-counts", action="store_true",
                   help="evaluate the zone counts in the scenario instead of planning them")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        s = load(args.scenario)
        if args.seed is not None:
            s.sim = replace(s.sim, seed=args.seed)
        args.seed = s.sim.seed
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return COMMANDS[args.command](s, args)
    except (ScenarioError, UsageError, UnsupportedOperation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (energy.InfeasibleBudget, admission.InfeasibleScenario) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NumericalError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
