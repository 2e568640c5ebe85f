from datetime import timedelta

import numpy as np
import pytest

from dauval.errors import InsufficientDataError, NoDecayError
from dauval.tailfit import (
    PowerLawTail,
    build_template,
    detect_tmin,
    extrapolate,
    fit_power_law,
    read_tails_csv,
    write_tails_csv,
)

from conftest import BASE, make_record, power_law_record


def smoothed_argmax_oracle(values, window=7):
    """Brute-force argmax of the centered moving average (first maximum)."""
    half = window // 2
    best_idx, best = None, -np.inf
    for i in range(half, len(values) - half):
        m = sum(values[i - half : i + half + 1]) / window
        if m > best:
            best, best_idx = m, i
    return best_idx


class TestDetectTmin:
    def test_monotone_decreasing(self):
        rec = make_record(np.linspace(100, 10, 30))
        assert detect_tmin(rec) == 3  # first day a full 7-day window fits

    def test_triangle_ramp(self):
        values = np.concatenate([np.linspace(1, 100, 30), np.linspace(99, 5, 60)])
        rec = make_record(values)
        expected = smoothed_argmax_oracle(values)
        assert abs(detect_tmin(rec) - 29) <= 3
        assert detect_tmin(rec) == expected

    def test_constant_series_tie_break(self):
        rec = make_record(np.full(20, 7.0))
        assert detect_tmin(rec) == 3

    def test_short_series(self):
        with pytest.raises(InsufficientDataError):
            detect_tmin(make_record(np.ones(13)))

    def test_offset_series_counts_from_launch(self):
        rec = make_record(np.linspace(50, 10, 20), launch=BASE - timedelta(days=10))
        assert detect_tmin(rec) == 13


class TestFitPowerLaw:
    def test_exact_recovery(self):
        rec = power_law_record(1000.0, 1.0, 30, 200)
        tail = fit_power_law(rec, t_min=30)
        assert tail.gamma == pytest.approx(1.0, abs=1e-9)
        assert tail.amplitude == pytest.approx(1000.0, rel=1e-9)
        assert tail.r_squared == pytest.approx(1.0, abs=1e-9)

    def test_scaling_identity(self):
        rec = power_law_record(500.0, 1.5, 20, 300)
        tail = fit_power_law(rec, t_min=20)
        t_min = tail.t_min
        assert tail.value(2 * t_min) == pytest.approx(
            tail.value(t_min) / 2**tail.gamma, rel=1e-12
        )

    def test_noisy_recovery_rate(self):
        hits = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            noise = np.exp(rng.normal(0.0, 0.05, size=500))
            rec = power_law_record(1000.0, 1.5, 10, 509, noise=noise)
            tail = fit_power_law(rec, t_min=10)
            if abs(tail.gamma - 1.5) <= 0.05:
                hits += 1
        assert hits >= 95

    def test_insufficient_points(self):
        rec = power_law_record(100.0, 1.0, 1, 30)
        with pytest.raises(InsufficientDataError):
            fit_power_law(rec, t_min=25)

    def test_no_decay(self):
        rec = make_record(np.linspace(1, 100, 50))
        with pytest.raises(NoDecayError):
            fit_power_law(rec, t_min=1)

    def test_mostly_zero_window(self):
        values = np.concatenate([np.linspace(100, 50, 10), np.zeros(40)])
        rec = make_record(values)
        with pytest.raises(InsufficientDataError):
            fit_power_law(rec, t_min=1)

    def test_gamma_scale_invariant(self):
        rng = np.random.default_rng(3)
        noise = np.exp(rng.normal(0.0, 0.1, size=200))
        rec = power_law_record(1000.0, 1.2, 5, 204, noise=noise)
        rec10 = power_law_record(10000.0, 1.2, 5, 204, noise=noise)
        t1 = fit_power_law(rec, t_min=5)
        t2 = fit_power_law(rec10, t_min=5)
        assert t2.gamma == pytest.approx(t1.gamma, rel=1e-12)
        assert t2.amplitude == pytest.approx(10 * t1.amplitude, rel=1e-9)

    def test_invalid_tail_params_rejected(self):
        with pytest.raises(Exception):
            PowerLawTail(t_min=0, amplitude=1.0, gamma=1.0, r_squared=1.0)
        with pytest.raises(Exception):
            PowerLawTail(t_min=1, amplitude=1.0, gamma=-0.5, r_squared=1.0)


class TestExtrapolate:
    def template(self, gamma=1.0, t_end=200):
        rec = power_law_record(1000.0, gamma, 1, t_end)
        return build_template(rec, fit_power_law(rec, t_min=1))

    def test_identity_at_observed_length(self):
        tpl = self.template()
        n = len(tpl.record.observed)
        series = extrapolate(tpl, n)
        assert np.array_equal(series.values, tpl.record.observed.values)

    def test_continuity_one_decay_step(self):
        tpl = self.template(gamma=1.0, t_end=200)
        last = tpl.record.observed.values[-1]
        series = extrapolate(tpl, len(tpl.record.observed) + 1)
        assert series.values[-1] == pytest.approx(last * 200 / 201, rel=1e-9)

    def test_twenty_year_area_matches_integral(self):
        tpl = self.template(gamma=1.4, t_end=100)
        n = len(tpl.record.observed)
        horizon = 20 * 365
        series = extrapolate(tpl, horizon)
        tail_sum = series.values[n:].sum()
        # Independent check: midpoint-corrected integral of the closed form
        # s * A * t**-g over the extrapolated ages.
        s, a, g = tpl.handoff_scale, tpl.tail.amplitude, tpl.tail.gamma
        lo, hi = 100 + 1 - 0.5, horizon - 0.5 + 1
        integral = s * a * (hi ** (1 - g) - lo ** (1 - g)) / (1 - g)
        assert tail_sum == pytest.approx(integral, rel=1e-3)

    def test_prefix_stable(self):
        tpl = self.template()
        short = extrapolate(tpl, 400)
        long = extrapolate(tpl, 900)
        assert np.array_equal(long.values[:400], short.values)

    def test_extrapolated_segment_decreasing_positive(self):
        tpl = self.template(gamma=0.7)
        n = len(tpl.record.observed)
        values = extrapolate(tpl, n + 500).values[n:]
        assert np.all(values > 0)
        assert np.all(np.diff(values) < 0)

    def test_horizon_too_short(self):
        tpl = self.template()
        with pytest.raises(ValueError):
            extrapolate(tpl, len(tpl.record.observed) - 1)

    def test_flat_fallback_holds_last_value(self):
        rec = make_record(np.full(30, 42.0))
        tpl = build_template(rec, None)
        series = extrapolate(tpl, 50)
        assert np.all(series.values == 42.0)


class TestTailsCsvRoundTrip:
    def test_round_trip(self, tmp_path, decaying_template):
        path = tmp_path / "tails.csv"
        rec = make_record(np.full(30, 5.0), game_id="flat")
        flat = build_template(rec, None)
        write_tails_csv([decaying_template, flat], path)
        tails = read_tails_csv(path)
        assert set(tails) == {"g", "flat"}
        assert tails["flat"] is None
        orig = decaying_template.tail
        assert tails["g"].gamma == pytest.approx(orig.gamma, rel=1e-10)
        assert tails["g"].amplitude == pytest.approx(orig.amplitude, rel=1e-10)
        assert tails["g"].t_min == orig.t_min
