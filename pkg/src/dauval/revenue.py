"""Trailing annual revenue per DAU and the three revenue-growth scenarios."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np

from .errors import (
    CoverageError,
    DegenerateInputError,
    ParseError,
    ValidationError,
)
from .growthfit import (
    LogisticParams,
    bootstrap_k_samples,
    fit_logistic,
    fit_logistic_fixed_k,
)
from .timeseries import DailySeries

FINANCIALS_CSV_HEADER = ["quarter_end", "revenue_usd"]

# Consecutive quarter ends are ~91 days apart; this is the accepted slack.
QUARTER_GAP_MIN = 84
QUARTER_GAP_MAX = 98

TRAILING_WINDOW_DAYS = 365

HIGH_CONFIDENCE_LEVEL = 0.80
EXTREME_CONFIDENCE_LEVEL = 0.95


@dataclass(frozen=True)
class QuarterlyRevenue:
    quarter_end: date
    revenue: float

    def __post_init__(self):
        if self.revenue < 0 or not np.isfinite(self.revenue):
            raise ValidationError("quarterly revenue must be finite and >= 0")


@dataclass(frozen=True)
class RevenueScenarios:
    """Base / high / extreme revenue-per-DAU curves, anchored at ``origin``."""

    base: LogisticParams
    high: LogisticParams
    extreme: LogisticParams
    origin: date

    def __post_init__(self):
        if not self.base.K <= self.high.K <= self.extreme.K:
            raise ValidationError(
                f"scenario capacities out of order: "
                f"{self.base.K} / {self.high.K} / {self.extreme.K}"
            )

    def cases(self):
        return [("base", self.base), ("high", self.high), ("extreme", self.extreme)]


def load_financials(path) -> list[QuarterlyRevenue]:
    """Read a ``quarter_end,revenue_usd`` CSV, sorted by date."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError("empty file, expected header 'quarter_end,revenue_usd'")
        if [h.strip() for h in header] != FINANCIALS_CSV_HEADER:
            raise ParseError(
                f"bad header {header!r}, expected {','.join(FINANCIALS_CSV_HEADER)}",
                line=1,
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise ParseError(f"expected 2 fields, got {len(row)}", line=lineno)
            try:
                day = date.fromisoformat(row[0].strip())
                rev = float(row[1])
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from exc
            rows.append(QuarterlyRevenue(quarter_end=day, revenue=rev))
    rows.sort(key=lambda q: q.quarter_end)
    for a, b in zip(rows, rows[1:]):
        if a.quarter_end == b.quarter_end:
            raise ValidationError(f"duplicate quarter_end {a.quarter_end}")
    return rows


def trailing_annual_revenue(quarters: list[QuarterlyRevenue]):
    """R_i = sum of quarter i and the three preceding quarters.

    Defined from the 4th quarter onward; the quarters must be consecutive.
    """
    if len(quarters) < 4:
        raise ValidationError(f"need >= 4 quarters, got {len(quarters)}")
    for a, b in zip(quarters, quarters[1:]):
        gap = (b.quarter_end - a.quarter_end).days
        if not QUARTER_GAP_MIN <= gap <= QUARTER_GAP_MAX:
            raise ValidationError(
                f"quarters {a.quarter_end} -> {b.quarter_end} are {gap} days apart, "
                f"expected {QUARTER_GAP_MIN}-{QUARTER_GAP_MAX}"
            )
    revs = np.array([q.revenue for q in quarters])
    window = np.convolve(revs, np.ones(4), "valid")
    return [(quarters[i + 3].quarter_end, float(window[i])) for i in range(len(window))]


def revenue_per_dau(annual, dau: DailySeries):
    """Annual revenue divided by mean DAU over the 365 days ending each point.

    Returns (t, r) pairs with t in days since the first annual point.
    """
    if not annual:
        raise ValidationError("no annual revenue points")
    origin = annual[0][0]
    out = []
    for day, rev in annual:
        first = day - timedelta(days=TRAILING_WINDOW_DAYS - 1)
        if not dau.covers(first, day):
            raise CoverageError(
                f"DAU series does not cover the year ending {day} "
                f"(covers {dau.start_day}..{dau.end_day})"
            )
        lo = (first - dau.start_day).days
        mean_dau = float(dau.values[lo : lo + TRAILING_WINDOW_DAYS].mean())
        if mean_dau == 0:
            raise DegenerateInputError(f"mean DAU is zero for the year ending {day}")
        out.append(((day - origin).days, rev / mean_dau))
    return out


def build_scenarios(points, origin: date, seed=0, n_resamples: int = 1000) -> RevenueScenarios:
    """Fit the base curve, then re-fit with K pinned at its 80%/95% upper
    bootstrap confidence values for the high and extreme growth cases."""
    base = fit_logistic(points)
    ks = bootstrap_k_samples(points, base, n_resamples, seed)
    k_high, k_extreme = (float(np.quantile(ks, q))
                         for q in (HIGH_CONFIDENCE_LEVEL, EXTREME_CONFIDENCE_LEVEL))
    # Quantiles of a skewed bootstrap can fall below the point estimate;
    # clamp so the scenario ordering base <= high <= extreme always holds.
    k_high = max(k_high, base.K)
    k_extreme = max(k_extreme, k_high)
    max_y = max(float(y) for _, y in points)

    def pinned(k):
        if k <= base.K * (1 + 1e-12) or k <= max_y:
            # Interval collapsed onto the point estimate (zero-residual data).
            return base
        return fit_logistic_fixed_k(points, k)

    return RevenueScenarios(
        base=base, high=pinned(k_high), extreme=pinned(k_extreme), origin=origin
    )
