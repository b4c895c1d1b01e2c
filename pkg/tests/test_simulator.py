import math

import numpy as np
import pytest

from conftest import ALL, G_B, G_E, I_B, I_E, LN11, P_B, ids
from energybill import distributions as dist
from energybill.billing import BillingParams, expected_billing
from energybill.distributions import REJECTION, QueryVolumeDistribution as Q
from energybill.energy import EnergyParams, energy_variation, expected_energy
from energybill.simulator import (SimConfig, billing_sweep, draw_aggregate, draw_volumes,
                                  energy_sweep, r_squared, simulate_billing,
                                  simulate_device_energy, sweep)

PE = EnergyParams(G_E, I_E)
PB = BillingParams(G_B, I_B, P_B)


class TestEnergyExamples:
    def test_fixed_at_threshold(self):
        est = simulate_device_energy(PE.with_threshold(1.0), Q.fixed(1000), SimConfig(n_intervals=50))
        assert est.mean == G_E * 1000
        assert est.variation == 0.0

    def test_zero_threshold_estimators(self):
        cfg = SimConfig(n_intervals=3000, seed=5)
        d = Q.exponential(81_920)
        v = draw_volumes(d, cfg)
        mean, var = simulate_device_energy(PE, d, cfg)
        assert mean == pytest.approx(G_E * v.mean(), rel=1e-12)
        assert var == pytest.approx(G_E ** 2 * (v * v).mean(), rel=1e-12)

    def test_exponential_sweep(self):
        grid = np.linspace(0.1, 2.0, 20)
        s = energy_sweep(PE, Q.exponential(81_920), grid, SimConfig(n_intervals=2000))
        assert s.r_squared >= 0.996


class TestBillingExamples:
    def test_fixed(self):
        est = simulate_billing(PB.with_quota(5e6), Q.fixed(5e6), SimConfig(n_intervals=100))
        assert est.mean == pytest.approx(G_B * 5e6, rel=1e-14)
        assert est.active_fraction == 0.0

    def test_zero_quota(self):
        cfg = SimConfig(n_intervals=1000)
        d = Q.exponential(1e6)
        v = draw_volumes(d, cfg)
        est = simulate_billing(PB.with_quota(0.0), d, cfg)
        assert est.mean == pytest.approx((G_B + P_B) * v.mean(), rel=1e-12)
        assert est.mean_instances == cfg.instances_active

    def test_quota_required(self):
        with pytest.raises(ValueError):
            simulate_billing(PB, Q.exponential(1.0), SimConfig())

    def test_exponential_minimum(self):
        r_tot = 10 * 163_840
        grid = np.linspace(0, 4 * r_tot, 41)
        s = billing_sweep(PB, [(Q.exponential(163_840), 10)], grid, SimConfig(n_intervals=20_000))
        step = grid[1] - grid[0]
        assert abs(grid[s.argmin_simulated()] - LN11 * r_tot) <= step


class TestSweep:
    def test_identical_series(self):
        s = sweep("energy-exp", [1, 2, 3], lambda x: x * x, lambda x, cfg: x * x, SimConfig())
        assert s.r_squared == 1.0

    def test_constant_series_sentinel(self):
        s = sweep("billing", [1, 2, 3], lambda x: x, lambda x, cfg: 4.0, SimConfig())
        assert math.isnan(s.r_squared) and not s.r_squared_defined
        assert math.isnan(r_squared([2, 2], [1, 3]))

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            sweep("latency", [1], lambda x: x, lambda x, c: x, SimConfig())

    def test_uniform_energy_sweep(self):
        grid = np.linspace(0.1, 2.0, 20)
        s = energy_sweep(PE, Q.uniform(81_920), grid, SimConfig(n_intervals=2000))
        assert s.r_squared >= 0.996


class TestDeterminism:
    @pytest.mark.parametrize("mode", ["inverse-transform", REJECTION])
    def test_bit_identical(self, mode):
        cfg = SimConfig(n_intervals=10_000, seed=11, sampler_mode=mode)
        a = simulate_device_energy(PE.with_threshold(0.7), Q.pareto(81_920, 3), cfg)
        b = simulate_device_energy(PE.with_threshold(0.7), Q.pareto(81_920, 3), cfg)
        assert a == b

    def test_prefix_stable(self):
        # blocks are seeded independently, so longer runs extend shorter ones
        d = Q.exponential(1.0)
        short = draw_volumes(d, SimConfig(n_intervals=5000, seed=2))
        long = draw_volumes(d, SimConfig(n_intervals=9000, seed=2))
        np.testing.assert_array_equal(short, long[:5000])

    def test_convolved_aggregate(self):
        cfg = SimConfig(n_intervals=4000, seed=1)
        zones = [(Q.exponential(1.0), 2), (Q.fixed(3.0), 1)]
        x = draw_aggregate(zones, cfg, "convolved")
        np.testing.assert_array_equal(x, draw_aggregate(zones, cfg, "convolved"))
        assert x.min() >= 3.0
        assert x.mean() == pytest.approx(5.0, rel=0.03)


@pytest.mark.parametrize("d", ALL, ids=ids(ALL))
def test_unbiased(d):
    cfg = SimConfig(n_intervals=100_000, seed=123)
    d = d.with_mean(81_920)
    v = draw_volumes(d, cfg)
    for c in np.linspace(0.2, 1.8, 5):
        p = PE.with_threshold(c)
        est = simulate_device_energy(p, d, cfg, volumes=v)
        e, ev = expected_energy(p, d), energy_variation(p, d)
        assert abs(est.mean - e) <= max(0.01 * e, 4 * est.mean_stderr)
        if d.alpha is None or d.alpha > 4:
            # the squared excess has finite variance only when alpha > 4
            assert abs(est.variation - ev) <= max(0.01 * ev, 4 * est.variation_stderr)
        b = PB.with_quota(c * d.mean)
        bill = simulate_billing(b, d, cfg, volumes=v)
        eb = expected_billing(b, d)
        assert abs(bill.mean - eb) <= max(0.01 * eb, 4 * bill.stderr)


def test_consistency_over_seeds():
    d = Q.half_gaussian(81_920)
    p = PE.with_threshold(0.8)
    truth = expected_energy(p, d)
    err = {n: np.mean([abs(simulate_device_energy(p, d, SimConfig(n_intervals=n, seed=s)).mean - truth)
                       for s in range(20)]) for n in (2000, 4000)}
    assert err[4000] < err[2000]
