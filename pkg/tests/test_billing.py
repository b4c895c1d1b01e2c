import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import ALL, CONTINUOUS, G_B, I_B, LN11, P_B, ids, rel_close
from energybill import distributions as dist
from energybill.billing import (BillingParams, RateWarning, expected_billing, expected_billing_generic,
                                min_billing, optimal_quota)
from energybill.distributions import QueryVolumeDistribution as Q

RATES = BillingParams(G_B, I_B, P_B)


class TestExamples:
    def test_zero_quota(self, any_dist):
        b = BillingParams(0.3, 0.2, 0.5, c_b=0.0)
        assert expected_billing(b, any_dist) == pytest.approx(0.8 * any_dist.mean, rel=1e-14)

    def test_uniform(self):
        assert expected_billing(BillingParams(0, 1, 1, 1.0), Q.uniform(1)) == pytest.approx(0.5)

    def test_exponential(self):
        b = BillingParams(0, 1, 1, math.log(2))
        assert expected_billing(b, Q.exponential(1)) == pytest.approx(math.log(2), rel=1e-14)

    def test_median_quota(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RateWarning)
            b = BillingParams(0, 1, 1)
            assert optimal_quota(b, Q.uniform(7)) == pytest.approx(7.0)
            assert optimal_quota(b, Q.pareto(1, 4)) == pytest.approx(0.75 * 2 ** 0.25, rel=1e-14)
            assert min_billing(BillingParams(0, 2, 2), Q.uniform(3)) == pytest.approx(3.0)

    def test_deployment_rates(self):
        assert optimal_quota(RATES, Q.exponential(5)) == pytest.approx(5 * LN11, rel=1e-14)
        assert LN11 == pytest.approx(2.3979, abs=1e-4)
        assert min_billing(RATES, Q.pareto(11_431_200, 4.8)) == pytest.approx(2.85e-3, rel=0.01)
        b = BillingParams(0.0, I_B, P_B)
        assert min_billing(b, Q.exponential(3)) == pytest.approx(I_B * LN11 * 3, rel=1e-14)

    def test_fixed(self):
        d = Q.fixed(10)
        assert optimal_quota(RATES, d) == 10
        assert min_billing(RATES, d) == pytest.approx(G_B * 10)
        assert expected_billing(RATES.with_quota(4.0), d) == pytest.approx(G_B * 10 + P_B * 6)

    def test_rate_warning(self):
        with pytest.warns(RateWarning):
            optimal_quota(BillingParams(0, 1, 0.5), Q.exponential(1))
        with pytest.warns(RateWarning):
            assert optimal_quota(BillingParams(0, 1, 0), Q.exponential(1)) == 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            BillingParams(0, 0, 1)
        with pytest.raises(ValueError):
            BillingParams(0, 1, 1, c_b=-1.0)


@pytest.mark.parametrize("d", CONTINUOUS, ids=ids(CONTINUOUS))
class TestShape:
    def test_convex(self, d):
        cs = np.linspace(0, 5, 201)
        y = np.array([expected_billing(RATES.with_quota(c), d) for c in cs]) / G_B
        assert np.all(np.diff(y, 2) >= -1e-8)

    def test_min_equals_expected_at_optimum(self, d):
        assert rel_close(min_billing(RATES, d), expected_billing(RATES, d), 1e-12)

    def test_quantile_identity(self, d):
        assert rel_close(optimal_quota(RATES, d), dist.quantile(d, RATES.critical_ratio), 1e-12)


families = st.sampled_from(["uniform", "pareto", "exponential", "half_gaussian"])


@settings(max_examples=200, deadline=None)
@given(families, st.floats(2.05, 20.0), st.floats(1.0, 1e8), st.floats(0, 1e-9),
       st.floats(1e-11, 1e-9), st.floats(1.01, 50.0))
def test_optimality(family, alpha, r, g, i, ratio):
    d = Q(family, r, alpha if family == "pareto" else None)
    b = BillingParams(g, i, i * ratio)
    best = expected_billing(b, d)
    grid = [expected_billing(b.with_quota(c), d) for c in np.linspace(0, 5 * r, 200)]
    assert best <= min(grid) * (1 + 1e-12)
    assert rel_close(best, min_billing(b, d), 1e-10)


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(["uniform", "pareto", "exponential", "half_gaussian", "fixed"]),
       st.floats(2.05, 20.0), st.floats(1.0, 1e8), st.floats(0.0, 4.0))
def test_closed_form_matches_generic(family, alpha, r, c):
    d = Q(family, r, alpha if family == "pareto" else None)
    b = RATES.with_quota(c * r)
    assert rel_close(expected_billing(b, d), expected_billing_generic(b, d), 1e-8)


@given(st.floats(1.0, 1e9), st.floats(0.01, 100.0))
def test_min_billing_linear_in_volume(r, k):
    for d in (Q.uniform(r), Q.pareto(r, 4.8), Q.exponential(r), Q.half_gaussian(r)):
        assert rel_close(min_billing(RATES, d.with_mean(k * r)), k * min_billing(RATES, d), 1e-12)
