"""Deterministic synthetic fixtures with known ground-truth parameters.

The original DAU and financial datasets are proprietary, so desk-scale
runs use generated catalogs: each game ramps up for 30 days and then
decays on an exact power law with small multiplicative noise, games launch
on a fixed cadence, and quarterly revenues are constructed so that revenue
per DAU follows a known logistic curve.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np

BASE_DATE = date(2010, 1, 1)

RAMP_DAYS = 30
OBSERVED_AFTER_LAST_LAUNCH = 420
DAU_NOISE_SIGMA = 0.01

QUARTER_DAYS = 91
MAX_QUARTERS = 12
REVENUE_NOISE_SIGMA = 0.02

# Ground-truth logistic for revenue per DAU (USD/DAU/year).
REVENUE_K = 30.0
REVENUE_R = 0.008
REVENUE_U0 = 6.0

GAMMA_RANGE = (0.8, 1.6)
PEAK_RANGE = (2e5, 2e6)

GROUND_TRUTH_FILENAME = "ground_truth.json"
DAU_FILENAME = "dau.csv"
FINANCIALS_FILENAME = "financials.csv"


@dataclass(frozen=True)
class FixtureGame:
    game_id: str
    launch_day: int
    peak: float
    gamma: float


def _game_trajectory(game: FixtureGame, length: int, rng) -> np.ndarray:
    t = np.arange(length, dtype=float)
    ramp = game.peak * (t + 1) / RAMP_DAYS
    decay = np.empty_like(t)
    decay[: RAMP_DAYS] = np.inf
    decay[RAMP_DAYS:] = game.peak * (t[RAMP_DAYS:] / RAMP_DAYS) ** -game.gamma
    values = np.minimum(ramp, decay)
    values *= np.exp(rng.normal(0.0, DAU_NOISE_SIGMA, size=length))
    return values


def make_fixture(out_dir, games: int, seed: int, cadence_days: int = 53):
    """Write dau.csv, financials.csv and a ground-truth sidecar to out_dir.

    Returns the paths written. Fully determined by (games, seed, cadence).
    """
    if games < 1:
        raise ValueError("games must be >= 1")
    if cadence_days < 1:
        raise ValueError("cadence_days must be >= 1")

    end_day = (games - 1) * cadence_days + OBSERVED_AFTER_LAST_LAUNCH

    game_specs = []
    trajectories = []
    total = np.zeros(end_day + 1)
    for g in range(games):
        rng = np.random.default_rng(np.random.SeedSequence((seed, g)))
        gamma = float(rng.uniform(*GAMMA_RANGE))
        peak = float(np.exp(rng.uniform(*np.log(PEAK_RANGE))))
        game = FixtureGame(
            game_id=f"game_{g:02d}",
            launch_day=g * cadence_days,
            peak=peak,
            gamma=gamma,
        )
        length = end_day - game.launch_day + 1
        traj = _game_trajectory(game, length, rng)
        game_specs.append(game)
        trajectories.append(traj)
        total[game.launch_day :] += traj

    dau_path = out_dir / DAU_FILENAME
    with open(dau_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "game_id", "dau"])
        for game, traj in zip(game_specs, trajectories):
            for i, value in enumerate(traj):
                day = BASE_DATE + timedelta(days=game.launch_day + i)
                writer.writerow([day.isoformat(), game.game_id, f"{value:.6f}"])

    fin_path = out_dir / FINANCIALS_FILENAME
    quarters = _make_financials(total, end_day, seed)
    with open(fin_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["quarter_end", "revenue_usd"])
        for day, revenue in quarters:
            writer.writerow(
                [(BASE_DATE + timedelta(days=day)).isoformat(), f"{revenue:.2f}"]
            )

    truth_path = out_dir / GROUND_TRUTH_FILENAME
    truth = {
        "seed": seed,
        "cadence_days": cadence_days,
        "base_date": BASE_DATE.isoformat(),
        "games": [
            {
                "game_id": g.game_id,
                "launch_day": g.launch_day,
                "launch_date": (BASE_DATE + timedelta(days=g.launch_day)).isoformat(),
                "peak": g.peak,
                "gamma": g.gamma,
            }
            for g in game_specs
        ],
        "revenue_logistic": {"K": REVENUE_K, "r": REVENUE_R, "u0": REVENUE_U0},
    }
    with open(truth_path, "w", encoding="utf-8") as fh:
        json.dump(truth, fh, indent=2)
        fh.write("\n")

    return dau_path, fin_path, truth_path


def _rate_per_dau(t):
    """Ground-truth annual revenue per DAU at t days past the rate origin."""
    e = np.exp(REVENUE_R * np.asarray(t, dtype=float))
    return REVENUE_K * REVENUE_U0 * e / (REVENUE_K - REVENUE_U0 + REVENUE_U0 * e)


def _make_financials(total_dau: np.ndarray, end_day: int, seed: int):
    """Quarterly revenues accrued day by day from the ground-truth rate curve.

    Each day contributes rate(t)/365 dollars per active user, so the derived
    trailing-annual revenue per DAU tracks the logistic rate closely and
    every quarter stays positive regardless of how the user base decays.
    """
    # Quarter ends anchored to the last observed day; the first annual point
    # (4th quarter) must have a full trailing year of DAU behind it.
    n_q = min(MAX_QUARTERS, 4 + (end_day - 364) // QUARTER_DAYS)
    if n_q < 4:
        raise ValueError(
            "fixture too short for financials; need more games or a longer cadence"
        )
    q_days = [end_day - QUARTER_DAYS * (n_q - 1 - k) for k in range(n_q)]

    # Sentinel keeps the financials substream disjoint from per-game streams.
    rng = np.random.default_rng(np.random.SeedSequence((seed, 999_983)))
    origin = q_days[3]
    daily_revenue = _rate_per_dau(np.arange(end_day + 1) - origin) / 365.0 * total_dau
    quarterly = []
    for k, day in enumerate(q_days):
        lo = q_days[k - 1] + 1 if k > 0 else day - QUARTER_DAYS + 1
        q_rev = float(daily_revenue[max(lo, 0) : day + 1].sum())
        q_rev *= float(np.exp(rng.normal(0.0, REVENUE_NOISE_SIGMA)))
        quarterly.append(q_rev)
    return list(zip(q_days, quarterly))
