"""Decay-onset detection, power-law tail fitting and trajectory extrapolation.

Game age t is measured in days since launch. The fitted tail f(t) = A * t**-g
takes over one day after the last observation, rescaled so the trajectory is
continuous with the last observed value up to a single decay step.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, NoDecayError, ValidationError
from .timeseries import DailySeries, GameRecord

SMOOTH_WINDOW = 7  # centered moving average used for decay-onset detection
MIN_SERIES_DAYS = 14
MIN_TAIL_POINTS = 10

TAILS_CSV_HEADER = ["game_id", "t_min", "amplitude", "gamma", "r_squared", "handoff_scale"]


@dataclass(frozen=True)
class PowerLawTail:
    """Fitted decay law f(t) = amplitude * t**-gamma for t >= t_min."""

    t_min: int
    amplitude: float
    gamma: float
    r_squared: float

    def __post_init__(self):
        if self.t_min < 1:
            raise ValidationError("t_min must be >= 1")
        if self.amplitude <= 0:
            raise ValidationError("amplitude must be positive")
        if self.gamma <= 0:
            raise ValidationError("gamma must be positive (decay, not growth)")
        if not 0.0 <= self.r_squared <= 1.0:
            raise ValidationError("r_squared must lie in [0, 1]")

    def value(self, t):
        """Evaluate the raw (unscaled) power law at age t (days, >= 1)."""
        return self.amplitude * np.asarray(t, dtype=float) ** -self.gamma


@dataclass(frozen=True)
class GameTemplate:
    """A game's observed trajectory plus its tail; the replayable unit.

    ``tail is None`` marks the explicit flat fallback: extrapolation holds
    the last observed value constant instead of decaying.
    """

    record: GameRecord
    tail: PowerLawTail | None
    handoff_scale: float

    def __post_init__(self):
        if self.handoff_scale < 0 or not np.isfinite(self.handoff_scale):
            raise ValidationError("handoff_scale must be finite and >= 0")

    @property
    def observed_offset(self) -> int:
        """Age of the first observed day."""
        return (self.record.observed.start_day - self.record.launch_date).days

    @property
    def last_observed_age(self) -> int:
        return self.observed_offset + len(self.record.observed) - 1

    def age_values(self, max_age: int) -> np.ndarray:
        """Trajectory values for ages 0..max_age inclusive.

        Ages before the first observation contribute 0; observed ages are
        verbatim; ages past the last observation follow the scaled tail.
        """
        obs = self.record.observed.values
        off = self.observed_offset
        t_last = self.last_observed_age
        out = np.zeros(max_age + 1)
        out[off : min(off + len(obs), max_age + 1)] = obs[: max(0, max_age + 1 - off)]
        if max_age > t_last:
            t = np.arange(t_last + 1, max_age + 1, dtype=float)
            if self.tail is None:
                out[t_last + 1 :] = obs[-1]
            else:
                out[t_last + 1 :] = self.handoff_scale * self.tail.value(t)
        return out


def detect_tmin(record: GameRecord) -> int:
    """Decay onset: argmax of the 7-day centered moving average of DAU.

    Ties resolve to the earliest day. Needs at least 14 observed days so the
    smoothing window has room on both sides.
    """
    values = record.observed.values
    if len(values) < MIN_SERIES_DAYS:
        raise InsufficientDataError(
            f"{record.game_id}: need >= {MIN_SERIES_DAYS} days, have {len(values)}"
        )
    smoothed = np.convolve(values, np.full(SMOOTH_WINDOW, 1.0 / SMOOTH_WINDOW), "valid")
    half = SMOOTH_WINDOW // 2
    idx = int(np.argmax(smoothed)) + half  # argmax returns the first maximum
    offset = (record.observed.start_day - record.launch_date).days
    return max(offset + idx, 1)


def fit_power_law(record: GameRecord, t_min: int) -> PowerLawTail:
    """OLS of log(DAU) on log(age) over the decay regime t >= t_min.

    gamma is the negated slope and amplitude exp(intercept). Zero-DAU points
    are dropped (log undefined); more than 50% zeros in the window, or fewer
    than 10 usable points, is insufficient data. A non-negative slope means
    no decay and is an error.
    """
    if t_min < 1:
        raise ValueError("t_min must be >= 1")
    offset = (record.observed.start_day - record.launch_date).days
    t = offset + np.arange(len(record.observed))
    y = record.observed.values
    window = t >= t_min
    n_window = int(window.sum())
    usable = window & (y > 0)
    n_usable = int(usable.sum())
    if n_window > 0 and n_usable < 0.5 * n_window:
        raise InsufficientDataError(
            f"{record.game_id}: more than half the tail window is zero DAU"
        )
    if n_usable < MIN_TAIL_POINTS:
        raise InsufficientDataError(
            f"{record.game_id}: {n_usable} usable tail points, need >= {MIN_TAIL_POINTS}"
        )
    log_t = np.log(t[usable].astype(float))
    log_y = np.log(y[usable])
    slope, intercept = np.polyfit(log_t, log_y, 1)
    if slope >= 0:
        raise NoDecayError(
            f"{record.game_id}: tail slope {slope:.4f} >= 0, no decay to fit"
        )
    resid = log_y - (slope * log_t + intercept)
    ss_tot = float(np.sum((log_y - log_y.mean()) ** 2))
    r_squared = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return PowerLawTail(
        t_min=int(t_min),
        amplitude=float(np.exp(intercept)),
        gamma=float(-slope),
        r_squared=float(min(max(r_squared, 0.0), 1.0)),
    )


def build_template(record: GameRecord, tail: PowerLawTail | None) -> GameTemplate:
    """Attach a tail to a record, rescaled for continuity at the handoff.

    The scale is chosen so the first extrapolated day equals the last
    observed value times one decay step of the fitted law.
    """
    if tail is None:
        return GameTemplate(record=record, tail=None, handoff_scale=1.0)
    offset = (record.observed.start_day - record.launch_date).days
    t_last = offset + len(record.observed) - 1
    if t_last < 1:
        raise ValidationError(f"{record.game_id}: trajectory too short for a tail")
    last_value = float(record.observed.values[-1])
    scale = last_value / float(tail.value(t_last))
    return GameTemplate(record=record, tail=tail, handoff_scale=scale)


def extrapolate(template: GameTemplate, horizon_days: int) -> DailySeries:
    """Observed values verbatim, then the scaled tail, out to horizon_days."""
    n_obs = len(template.record.observed)
    if horizon_days < n_obs:
        raise ValueError(
            f"horizon_days={horizon_days} shorter than observed length {n_obs}"
        )
    off = template.observed_offset
    values = template.age_values(off + horizon_days - 1)[off:]
    return DailySeries(start_day=template.record.observed.start_day, values=values)


def write_tails_csv(templates: list[GameTemplate], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TAILS_CSV_HEADER)
        for tpl in templates:
            if tpl.tail is None:
                writer.writerow(
                    [tpl.record.game_id, "", "", "", "", f"{tpl.handoff_scale:.12g}"]
                )
            else:
                writer.writerow(
                    [
                        tpl.record.game_id,
                        tpl.tail.t_min,
                        f"{tpl.tail.amplitude:.12g}",
                        f"{tpl.tail.gamma:.12g}",
                        f"{tpl.tail.r_squared:.12g}",
                        f"{tpl.handoff_scale:.12g}",
                    ]
                )


def read_tails_csv(path) -> dict[str, PowerLawTail | None]:
    """Load fitted tails keyed by game_id. Blank tail fields mean flat fallback."""
    from .errors import ParseError

    tails: dict[str, PowerLawTail | None] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != TAILS_CSV_HEADER:
            raise ParseError(
                f"bad tails header, expected {','.join(TAILS_CSV_HEADER)}", line=1
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 6:
                raise ParseError(f"expected 6 fields, got {len(row)}", line=lineno)
            game_id = row[0].strip()
            if game_id in tails:
                raise ValidationError(f"line {lineno}: duplicate game_id {game_id}")
            if row[1].strip() == "":
                tails[game_id] = None
                continue
            try:
                tails[game_id] = PowerLawTail(
                    t_min=int(row[1]),
                    amplitude=float(row[2]),
                    gamma=float(row[3]),
                    r_squared=float(row[4]),
                )
            except ValueError as exc:
                raise ParseError(f"bad tail row: {exc}", line=lineno) from exc
    return tails
