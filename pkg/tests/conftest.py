from datetime import date, timedelta

import numpy as np
import pytest

from dauval.tailfit import GameRecord, build_template, fit_power_law
from dauval.timeseries import DailySeries

BASE = date(2011, 1, 1)


def make_series(values, start=BASE):
    return DailySeries(start_day=start, values=np.asarray(values, dtype=float))


def make_record(values, game_id="g", start=BASE, launch=None):
    return GameRecord(
        game_id=game_id,
        launch_date=launch if launch is not None else start,
        observed=make_series(values, start=start),
    )


def power_law_record(amplitude, gamma, t_start, t_end, game_id="g", noise=None):
    """A record sampled from an exact power law f(t) = amplitude * t**-gamma."""
    t = np.arange(t_start, t_end + 1, dtype=float)
    values = amplitude * t**-gamma
    if noise is not None:
        values = values * noise
    return GameRecord(
        game_id=game_id,
        launch_date=BASE,
        observed=DailySeries(start_day=BASE + timedelta(days=t_start), values=values),
    )


@pytest.fixture
def decaying_template():
    record = power_law_record(1000.0, 1.2, 1, 120)
    return build_template(record, fit_power_law(record, t_min=1))
