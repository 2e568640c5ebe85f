"""Ingestion, alignment, selection and aggregation of per-game DAU series."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np

from .errors import DegenerateInputError, ParseError, ValidationError

DAU_CSV_HEADER = ["date", "game_id", "dau"]


@dataclass(frozen=True)
class DailySeries:
    """A gapless, date-indexed sequence of non-negative daily values.

    Day i of ``values`` corresponds to ``start_day + i``. Values are
    real-valued so interpolation and scaling stay closed operations.
    """

    start_day: date
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or len(vals) < 1:
            raise ValidationError("series must hold at least one value")
        if not np.all(np.isfinite(vals)):
            raise ValidationError("series values must be finite")
        if np.any(vals < 0):
            raise ValidationError("series values must be >= 0")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)

    @property
    def end_day(self) -> date:
        return self.start_day + timedelta(days=len(self.values) - 1)

    def covers(self, first: date, last: date) -> bool:
        return self.start_day <= first and self.end_day >= last


@dataclass(frozen=True)
class GameRecord:
    """One game's identity, launch date and observed DAU trajectory."""

    game_id: str
    launch_date: date
    observed: DailySeries

    def __post_init__(self):
        if self.observed.start_day < self.launch_date:
            raise ValidationError(
                f"{self.game_id}: observations start before launch date"
            )

    @property
    def peak_dau(self) -> float:
        return float(self.observed.values.max())


def load_catalog(path) -> list[GameRecord]:
    """Read a ``date,game_id,dau`` CSV into one GameRecord per game.

    Rows may arrive in any order. Interior date gaps are filled with linear
    interpolation; leading/trailing gaps are never invented. Duplicate
    (game, date) rows and negative DAU values are rejected.
    """
    per_game: dict[str, dict[date, float]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError("empty file, expected header 'date,game_id,dau'")
        if [h.strip() for h in header] != DAU_CSV_HEADER:
            raise ParseError(
                f"bad header {header!r}, expected {','.join(DAU_CSV_HEADER)}", line=1
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise ParseError(f"expected 3 fields, got {len(row)}", line=lineno)
            raw_date, game_id, raw_dau = (f.strip() for f in row)
            try:
                day = date.fromisoformat(raw_date)
            except ValueError as exc:
                raise ParseError(f"bad date {raw_date!r}: {exc}", line=lineno) from exc
            try:
                dau = float(raw_dau)
            except ValueError as exc:
                raise ParseError(f"bad dau {raw_dau!r}", line=lineno) from exc
            if not np.isfinite(dau) or dau < 0:
                raise ValidationError(
                    f"line {lineno}: dau must be a finite non-negative number, "
                    f"got {raw_dau}"
                )
            if not game_id:
                raise ParseError("empty game_id", line=lineno)
            days = per_game.setdefault(game_id, {})
            if day in days:
                raise ValidationError(
                    f"line {lineno}: duplicate row for ({game_id}, {day})"
                )
            days[day] = dau

    if not per_game:
        raise ParseError("file contains a header but no data rows")

    records = []
    for game_id in sorted(per_game):
        days = per_game[game_id]
        first, last = min(days), max(days)
        n = (last - first).days + 1
        offsets = np.array([(d - first).days for d in sorted(days)], dtype=float)
        observed = np.array([days[first + timedelta(days=int(o))] for o in offsets])
        # np.interp fills interior holes linearly; endpoints are always present.
        values = np.interp(np.arange(n, dtype=float), offsets, observed)
        records.append(
            GameRecord(
                game_id=game_id,
                launch_date=first,  # launch defaults to first observed date
                observed=DailySeries(start_day=first, values=values),
            )
        )
    return records


def select_top(catalog: list[GameRecord], n: int) -> list[GameRecord]:
    """The n games with the largest peak DAU, descending by peak.

    Ties break by earlier launch date, then lexicographic game_id.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if n > len(catalog):
        raise ValueError(f"n={n} exceeds catalog size {len(catalog)}")
    ranked = sorted(catalog, key=lambda g: (-g.peak_dau, g.launch_date, g.game_id))
    return ranked[:n]


def coverage_fraction(subset: list[GameRecord], catalog: list[GameRecord]) -> float:
    """Share of total person-days captured by ``subset`` relative to ``catalog``."""
    catalog_ids = {g.game_id for g in catalog}
    missing = [g.game_id for g in subset if g.game_id not in catalog_ids]
    if missing:
        raise ValueError(f"subset games not in catalog: {missing}")
    total = sum(float(g.observed.values.sum()) for g in catalog)
    if not catalog or total == 0.0:
        raise DegenerateInputError("catalog has no users to cover")
    part = sum(float(g.observed.values.sum()) for g in subset)
    return part / total


def aggregate(series_list: list[DailySeries], start: date, num_days: int) -> DailySeries:
    """Pointwise sum of the series over [start, start + num_days).

    A series contributes zero outside its own support; an empty list yields
    an all-zero series.
    """
    if num_days < 1:
        raise ValueError("window must be non-empty")
    out = np.zeros(num_days)
    for s in series_list:
        lo = (s.start_day - start).days
        hi = lo + len(s.values)
        src_lo = max(0, -lo)
        dst_lo = max(0, lo)
        dst_hi = min(num_days, hi)
        if dst_hi > dst_lo:
            out[dst_lo:dst_hi] += s.values[src_lo : src_lo + (dst_hi - dst_lo)]
    return DailySeries(start_day=start, values=out)
