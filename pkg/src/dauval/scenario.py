"""Semi-bootstrap Monte Carlo engine for the aggregate DAU forecast.

Existing games decay forward on their fitted tails from the simulation
start; every ``tau`` days thereafter one template is drawn uniformly at
random (with replacement) and replayed from launch, clipped at the horizon.
Each scenario draws from a substream fully determined by (seed,
scenario_id), so ensembles are reproducible at any parallelism degree.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date

import numpy as np

from .errors import InsufficientDataError, ValidationError
from .tailfit import GameTemplate
from .timeseries import DailySeries

DAYS_PER_YEAR = 365

SCENARIO_CSV_HEADER = ["scenario_id", "day_offset", "dau"]
BAND_CSV_HEADER = ["day_offset", "p2.5", "p25", "p50", "p75", "p97.5"]
BAND_PERCENTILES = [2.5, 25.0, 50.0, 75.0, 97.5]


@dataclass(frozen=True)
class SimulationConfig:
    tau: int
    present: date
    templates: tuple[GameTemplate, ...]
    horizon_years: int = 20
    n_scenarios: int = 1000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "templates", tuple(self.templates))
        if not self.templates:
            raise ValidationError("need at least one template")
        if self.tau < 1:
            raise ValidationError("tau must be >= 1 day")
        if self.horizon_years < 1:
            raise ValidationError("horizon_years must be positive")
        if self.n_scenarios < 1:
            raise ValidationError("n_scenarios must be >= 1")

    @property
    def horizon_days(self) -> int:
        return DAYS_PER_YEAR * self.horizon_years


@dataclass(frozen=True)
class Scenario:
    """One simulated aggregate DAU path from present to present + horizon."""

    scenario_id: int
    dau: DailySeries


@dataclass
class _Curves:
    """Trajectories shared by every scenario of one config."""

    existing: np.ndarray          # sum of existing games' continuations
    launch: list[np.ndarray]      # per-template trajectory from age 0


def estimate_tau(templates) -> int:
    """Mean gap between distinct launch dates, rounded to whole days (min 1)."""
    launches = sorted({t.record.launch_date for t in templates})
    if len(launches) < 2:
        raise InsufficientDataError("need >= 2 distinct launch dates")
    mean_gap = (launches[-1] - launches[0]).days / (len(launches) - 1)
    return max(int(np.floor(mean_gap + 0.5)), 1)


def _build_curves(config: SimulationConfig) -> _Curves:
    h = config.horizon_days
    existing = np.zeros(h + 1)
    launch = []
    for tpl in config.templates:
        age_now = (config.present - tpl.record.launch_date).days
        if age_now < 0:
            raise ValidationError(
                f"{tpl.record.game_id} launches after the simulation start"
            )
        full = tpl.age_values(age_now + h)
        existing += full[age_now:]
        launch.append(full[: h + 1])
    return _Curves(existing=existing, launch=launch)


def simulate_scenario(config: SimulationConfig, scenario_id: int,
                      _curves: _Curves | None = None) -> Scenario:
    """One aggregate DAU path: existing games plus random replays each tau days."""
    curves = _curves if _curves is not None else _build_curves(config)
    h = config.horizon_days
    dau = curves.existing.copy()
    offsets = np.arange(config.tau, h + 1, config.tau)
    rng = np.random.default_rng(np.random.SeedSequence((config.seed, scenario_id)))
    draws = rng.integers(0, len(config.templates), size=len(offsets))
    for off, idx in zip(offsets, draws):
        dau[off:] += curves.launch[idx][: h + 1 - off]
    return Scenario(
        scenario_id=scenario_id,
        dau=DailySeries(start_day=config.present, values=dau),
    )


def run_ensemble(config: SimulationConfig) -> list[Scenario]:
    """All n_scenarios paths; identical regardless of execution order."""
    curves = _build_curves(config)
    return [
        simulate_scenario(config, i, _curves=curves)
        for i in range(config.n_scenarios)
    ]


def ensemble_matrix(scenarios: list[Scenario]) -> np.ndarray:
    return np.vstack([s.dau.values for s in scenarios])


def write_scenarios_csv(scenarios: list[Scenario], path) -> None:
    """Long-format export: scenario_id,day_offset,dau."""
    import pandas as pd

    mat = ensemble_matrix(scenarios)
    n, days = mat.shape
    frame = pd.DataFrame(
        {
            "scenario_id": np.repeat([s.scenario_id for s in scenarios], days),
            "day_offset": np.tile(np.arange(days), n),
            "dau": mat.ravel(),
        }
    )
    frame.to_csv(path, index=False, float_format="%.10g")


def read_scenarios_csv(path, start_day: date) -> list[Scenario]:
    import pandas as pd

    frame = pd.read_csv(path)
    if list(frame.columns) != SCENARIO_CSV_HEADER:
        from .errors import ParseError

        raise ParseError(
            f"bad scenario header, expected {','.join(SCENARIO_CSV_HEADER)}", line=1
        )
    scenarios = []
    for sid, group in frame.groupby("scenario_id", sort=True):
        values = group.sort_values("day_offset")["dau"].to_numpy()
        scenarios.append(
            Scenario(scenario_id=int(sid),
                     dau=DailySeries(start_day=start_day, values=values))
        )
    return scenarios


def write_band_csv(scenarios: list[Scenario], path) -> None:
    """Per-day percentile band across the ensemble."""
    mat = ensemble_matrix(scenarios)
    bands = np.percentile(mat, BAND_PERCENTILES, axis=0)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(BAND_CSV_HEADER)
        for day in range(mat.shape[1]):
            writer.writerow([day] + [f"{b:.10g}" for b in bands[:, day]])
