from datetime import date, timedelta

import numpy as np
import pytest

from dauval.errors import ValidationError
from dauval.growthfit import LogisticParams
from dauval.scenario import Scenario
from dauval.timeseries import DailySeries
from dauval.valuation import (
    IPO_REFERENCE_VALUE_USD,
    ValuationConfig,
    ValuationDistribution,
    curves_pointwise_ordered,
    distribution_from_values,
    probability_exceeds,
    value_ensemble,
    value_scenario,
)

START = date(2012, 1, 1)


def flat_scenario(dau_value, years=20, scenario_id=0):
    n = 365 * years + 1
    return Scenario(
        scenario_id=scenario_id,
        dau=DailySeries(start_day=START, values=np.full(n, float(dau_value))),
    )


def saturated_rate(k):
    """Revenue curve already at its ceiling for every t >= 0."""
    return LogisticParams(K=k, r=1.0, u0=k * (1 - 1e-12), rss=0.0)


class TestValueScenario:
    def test_zero_dau_zero_value(self):
        cfg = ValuationConfig(discount_rate=0.0)
        assert value_scenario(flat_scenario(0.0), saturated_rate(5.0), cfg) == 0.0

    def test_undiscounted_closed_form(self):
        # Constant DAU D with a flat rate p and no discounting accrues
        # exactly Y * p * D * margin.
        cfg = ValuationConfig(profit_margin=0.15, discount_rate=0.0,
                              horizon_years=20)
        got = value_scenario(flat_scenario(1000.0), saturated_rate(2.0), cfg)
        assert got == pytest.approx(20 * 2.0 * 1000.0 * 0.15, rel=1e-9)

    def test_discounted_matches_annual_oracle(self):
        # Whole-year discounting of the same cash flows should agree with
        # the daily accrual to within the discretization error of a year.
        cfg = ValuationConfig(profit_margin=0.15, discount_rate=0.05,
                              horizon_years=20)
        got = value_scenario(flat_scenario(1000.0), saturated_rate(2.0), cfg)
        annual_cash = 2.0 * 1000.0 * 0.15
        # Mid-year discounting is a second-order-accurate stand-in for the
        # daily sum.
        oracle = sum(annual_cash / 1.05 ** (y + 0.5) for y in range(20))
        assert got == pytest.approx(oracle, rel=5e-3)

    def test_half_day_riemann_oracle(self):
        cfg = ValuationConfig(profit_margin=0.2, discount_rate=0.08,
                              horizon_years=3)
        got = value_scenario(flat_scenario(10.0), saturated_rate(4.0), cfg)
        t = (np.arange(3 * 365) + 0.5) / 365.0
        oracle = float(np.sum(4.0 * 10.0 * 0.2 / 365 / 1.08**t))
        assert got == pytest.approx(oracle, rel=1e-3)

    def test_linear_in_margin(self):
        lo = ValuationConfig(profit_margin=0.15)
        hi = ValuationConfig(profit_margin=0.30)
        s = flat_scenario(500.0)
        rate = saturated_rate(3.0)
        assert value_scenario(s, rate, hi) == pytest.approx(
            2 * value_scenario(s, rate, lo), rel=1e-12
        )

    def test_linear_in_dau(self):
        cfg = ValuationConfig()
        rate = saturated_rate(3.0)
        v1 = value_scenario(flat_scenario(100.0), rate, cfg)
        v3 = value_scenario(flat_scenario(300.0), rate, cfg)
        assert v3 == pytest.approx(3 * v1, rel=1e-12)

    def test_monotone_in_k(self):
        cfg = ValuationConfig()
        s = flat_scenario(100.0)
        grow = lambda k: LogisticParams(K=k, r=0.005, u0=1.0, rss=0.0)
        v33 = value_scenario(s, grow(33.0), cfg)
        v57 = value_scenario(s, grow(57.0), cfg)
        assert v57 > v33

    def test_monotone_in_discount(self):
        s = flat_scenario(100.0)
        rate = saturated_rate(3.0)
        cheap = value_scenario(s, rate, ValuationConfig(discount_rate=0.02))
        dear = value_scenario(s, rate, ValuationConfig(discount_rate=0.10))
        assert dear < cheap

    def test_revenue_origin_shifts_curve(self):
        cfg = ValuationConfig(discount_rate=0.0, horizon_years=1)
        growing = LogisticParams(K=30.0, r=0.01, u0=1.0, rss=0.0)
        s = flat_scenario(100.0, years=1)
        anchored_now = value_scenario(s, growing, cfg, revenue_origin=START)
        # An origin two years in the past puts the valuation window further
        # up the curve, so it must be worth more.
        earlier = value_scenario(
            s, growing, cfg, revenue_origin=START - timedelta(days=730)
        )
        assert earlier > anchored_now
        assert anchored_now == value_scenario(s, growing, cfg)

    def test_short_scenario_rejected(self):
        cfg = ValuationConfig(horizon_years=20)
        with pytest.raises(ValueError):
            value_scenario(flat_scenario(1.0, years=10), saturated_rate(1.0), cfg)

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            ValuationConfig(profit_margin=0.0)
        with pytest.raises(ValidationError):
            ValuationConfig(discount_rate=-0.01)


class TestDistribution:
    def test_known_percentiles(self):
        values = np.arange(1, 1001, dtype=float)
        dist = distribution_from_values(values)
        assert dist.median == pytest.approx(500.5)
        assert dist.ci95[0] == pytest.approx(25.975)
        assert dist.ci95[1] == pytest.approx(975.025)
        assert dist.mean == pytest.approx(500.5)

    def test_degenerate_collapses(self):
        dist = distribution_from_values([7.0] * 50)
        assert dist.median == 7.0
        assert dist.ci95 == (7.0, 7.0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            distribution_from_values([])

    def test_bracket_enforced(self):
        with pytest.raises(ValidationError):
            ValuationDistribution(
                scenario_values=(1.0,), median=5.0, ci95=(1.0, 2.0), mean=1.0
            )

    def test_ensemble_matches_per_scenario(self):
        cfg = ValuationConfig(horizon_years=2)
        rate = saturated_rate(2.0)
        scenarios = [flat_scenario(d, years=2, scenario_id=i)
                     for i, d in enumerate([10.0, 20.0, 30.0])]
        dist = value_ensemble(scenarios, rate, cfg)
        singles = [value_scenario(s, rate, cfg) for s in scenarios]
        assert list(dist.scenario_values) == pytest.approx(singles)
        assert dist.median == pytest.approx(singles[1])

    def test_ensemble_empty_rejected(self):
        with pytest.raises(ValueError):
            value_ensemble([], saturated_rate(1.0), ValuationConfig())


class TestProbabilityExceeds:
    def dist(self):
        return distribution_from_values(np.arange(1, 1001, dtype=float))

    def test_interior_threshold(self):
        assert probability_exceeds(self.dist(), 901.0) == pytest.approx(0.100)

    def test_below_minimum(self):
        assert probability_exceeds(self.dist(), 0.5) == 1.0

    def test_above_maximum(self):
        assert probability_exceeds(self.dist(), 1000.5) == 0.0

    def test_threshold_inclusive(self):
        assert probability_exceeds(self.dist(), 1000.0) == pytest.approx(0.001)

    def test_reference_value_constant(self):
        assert IPO_REFERENCE_VALUE_USD == 6.9e9


class TestCurveOrdering:
    def test_nested_curves_ordered(self):
        t = np.linspace(0, 7300, 200)
        lo = LogisticParams(K=33.0, r=0.01, u0=1.0, rss=0.0)
        hi = LogisticParams(K=57.0, r=0.01, u0=1.0, rss=0.0)
        assert curves_pointwise_ordered(lo, hi, t)
        assert not curves_pointwise_ordered(hi, lo, t)

    def test_crossing_curves_detected(self):
        t = np.linspace(0, 7300, 200)
        slow_big = LogisticParams(K=57.0, r=0.002, u0=1.0, rss=0.0)
        fast_small = LogisticParams(K=33.0, r=0.05, u0=1.0, rss=0.0)
        assert not curves_pointwise_ordered(fast_small, slow_big, t)
        assert not curves_pointwise_ordered(slow_big, fast_small, t)
