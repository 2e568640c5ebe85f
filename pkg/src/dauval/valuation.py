"""Discounted-cash-flow valuation of simulated DAU paths.

Present value is accrued daily: each day contributes its share of the
annual revenue-per-DAU curve times that day's DAU and the profit margin,
discounted at (1 + d)**(day/365). No terminal value is added; all profit
is assumed distributed, so the value is the truncated horizon sum.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date

import numpy as np

from .errors import ValidationError
from .growthfit import LogisticParams, logistic_value
from .scenario import DAYS_PER_YEAR, Scenario

# Company value implied by the IPO share price, used for exceedance reporting.
IPO_REFERENCE_VALUE_USD = 6.9e9

CI_LOW_PERCENTILE = 2.5
CI_HIGH_PERCENTILE = 97.5


@dataclass(frozen=True)
class ValuationConfig:
    profit_margin: float = 0.15
    discount_rate: float = 0.05
    horizon_years: int = 20

    def __post_init__(self):
        if not 0 < self.profit_margin <= 1:
            raise ValidationError("profit_margin must lie in (0, 1]")
        if self.discount_rate < 0:
            raise ValidationError("discount_rate must be >= 0")
        if self.horizon_years < 1:
            raise ValidationError("horizon_years must be positive")


@dataclass(frozen=True)
class ValuationDistribution:
    """Per-scenario present values with median, mean and 95% interval."""

    scenario_values: tuple
    median: float
    ci95: tuple
    mean: float

    def __post_init__(self):
        lo, hi = self.ci95
        if not lo <= self.median <= hi:
            raise ValidationError("ci95 must bracket the median")


def _day_weights(revenue: LogisticParams, cfg: ValuationConfig, t_offset: int):
    """Discounted per-DAU dollar weight for each day 1..horizon."""
    days = np.arange(1, DAYS_PER_YEAR * cfg.horizon_years + 1, dtype=float)
    r = logistic_value(revenue, days + t_offset)
    discount = (1.0 + cfg.discount_rate) ** (days / DAYS_PER_YEAR)
    return (r / DAYS_PER_YEAR) * cfg.profit_margin / discount


def value_scenario(scenario: Scenario, revenue: LogisticParams,
                   cfg: ValuationConfig, revenue_origin: date | None = None) -> float:
    """Present value of one scenario's DAU path under one revenue curve.

    ``revenue_origin`` anchors t=0 of the logistic curve; when omitted the
    curve's origin is taken to coincide with the scenario start.
    """
    h = DAYS_PER_YEAR * cfg.horizon_years
    if len(scenario.dau) < h + 1:
        raise ValueError(
            f"scenario spans {len(scenario.dau) - 1} days, horizon needs {h}"
        )
    t_offset = ((scenario.dau.start_day - revenue_origin).days
                if revenue_origin is not None else 0)
    weights = _day_weights(revenue, cfg, t_offset)
    return float(np.dot(scenario.dau.values[1 : h + 1], weights))


def distribution_from_values(values) -> ValuationDistribution:
    """Ensemble statistics under the linear-interpolation percentile convention."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("no scenario values")
    lo, med, hi = np.percentile(values, [CI_LOW_PERCENTILE, 50.0, CI_HIGH_PERCENTILE])
    return ValuationDistribution(
        scenario_values=tuple(values.tolist()),
        median=float(med),
        ci95=(float(lo), float(hi)),
        mean=float(values.mean()),
    )


def value_ensemble(scenarios: list[Scenario], revenue: LogisticParams,
                   cfg: ValuationConfig,
                   revenue_origin: date | None = None) -> ValuationDistribution:
    if not scenarios:
        raise ValueError("no scenarios to value")
    # One weight vector serves the whole ensemble; scenarios share a start day.
    t_offset = ((scenarios[0].dau.start_day - revenue_origin).days
                if revenue_origin is not None else 0)
    h = DAYS_PER_YEAR * cfg.horizon_years
    weights = _day_weights(revenue, cfg, t_offset)
    values = []
    for s in scenarios:
        if len(s.dau) < h + 1:
            raise ValueError(
                f"scenario {s.scenario_id} spans {len(s.dau) - 1} days, "
                f"horizon needs {h}"
            )
        values.append(float(np.dot(s.dau.values[1 : h + 1], weights)))
    return distribution_from_values(values)


def probability_exceeds(dist: ValuationDistribution, threshold: float) -> float:
    """Fraction of scenario values at or above the threshold."""
    values = np.asarray(dist.scenario_values)
    if values.size == 0:
        raise ValueError("empty distribution")
    return float(np.mean(values >= threshold))


def curves_pointwise_ordered(low: LogisticParams, high: LogisticParams,
                             t_grid) -> bool:
    """Whether the low curve never exceeds the high curve on the grid.

    Refitting (r, u0) under a pinned K can in principle cross the base
    curve; callers check this before trusting scenario-value ordering.
    """
    t = np.asarray(t_grid, dtype=float)
    return bool(np.all(logistic_value(low, t) <= logistic_value(high, t) * (1 + 1e-12)))
