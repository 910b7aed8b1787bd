"""Synthetic stand-in for station-by-day weather data.

Produces temperature, wind speed and solar radiation curves on days
1..365 for a number of stations, in the CSV layout the CLI reads. Solar
radiation depends on the other two variables through smooth station-level
effects, so a function-on-function model has something to find.
"""

from __future__ import annotations

import datetime as dt
from collections import defaultdict
from pathlib import Path

import numpy as np

from .errors import InputError

from .io import write_curve_csv

__all__ = ["synthetic_weather", "write_synthetic_weather", "daily_climatology"]


def synthetic_weather(n_stations: int = 70, n_days: int = 365, seed: int = 2010) -> dict:
    """Return ``{"days", "ids", "temperature", "wind", "solar"}`` arrays."""
    rng = np.random.default_rng(seed)
    days = np.arange(1, n_days + 1, dtype=float)
    season = np.sin(2 * np.pi * (days - 105) / n_days)
    north = rng.uniform(0, 1, n_stations)[:, None]
    windy = rng.normal(0, 1, n_stations)[:, None]

    temp_signal = 5.0 - 4.0 * north + 17.0 * (1 + 0.1 * north) * season
    temperature = temp_signal + rng.normal(0, 2.0, (n_stations, n_days))

    wind_signal = 4.5 + 0.8 * windy + 1.0 * np.cos(2 * np.pi * (days - 80) / n_days)
    wind = np.clip(wind_signal + rng.normal(0, 0.6, (n_stations, n_days)), 0.1, None)

    solar_signal = (
        15.0
        + 9.0 * np.sin(2 * np.pi * (days - 80) / n_days)
        + 0.15 * (temp_signal - temp_signal.mean(axis=0))
        - 0.6 * (wind_signal - wind_signal.mean(axis=0))
    )
    solar = np.clip(solar_signal + rng.normal(0, 1.5, (n_stations, n_days)), 0.0, None)
    ids = [f"station{i + 1:02d}" for i in range(n_stations)]
    return {
        "days": days,
        "ids": ids,
        "temperature": np.round(temperature, 3),
        "wind": np.round(wind, 3),
        "solar": np.round(solar, 3),
    }


def _short(v) -> str:
    return format(float(v), ".6g")


def write_synthetic_weather(out_dir, n_train: int = 50, **kw) -> list[Path]:
    """Write train/test CSVs (first ``n_train`` stations for training)."""
    data = synthetic_weather(**kw)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for var in ("temperature", "wind", "solar"):
        for part, sl in (("train", slice(0, n_train)), ("test", slice(n_train, None))):
            p = out / f"{var}_{part}.csv"
            write_curve_csv(p, data["days"], data[var][sl], data["ids"][sl], float_format=_short)
            paths.append(p)
    return paths


def daily_climatology(records, ids=None):
    """Average multi-year daily records into one 365-day profile per station.

    Parameters
    ----------
    records : iterable of (station, date, value)
        ``date`` is a :class:`datetime.date` or an ISO ``YYYY-MM-DD`` string.
        February 29 is dropped; missing values (None or NaN) are skipped.
    ids : sequence of str, optional
        Station order of the output rows (default: first appearance).

    Returns
    -------
    ids : list of str
    days : ndarray of shape (365,)
    values : ndarray of shape (n_stations, 365)
    """
    sums = defaultdict(lambda: np.zeros(365))
    counts = defaultdict(lambda: np.zeros(365))
    order = []
    for station, date, value in records:
        if isinstance(date, str):
            date = dt.date.fromisoformat(date)
        if value is None or (date.month, date.day) == (2, 29):
            continue
        value = float(value)
        if not np.isfinite(value):
            continue
        if station not in sums:
            order.append(station)
        doy = dt.date(2001, date.month, date.day).timetuple().tm_yday - 1  # non-leap calendar
        sums[station][doy] += value
        counts[station][doy] += 1
    ids = list(order if ids is None else ids)
    missing = [s for s in ids if s not in sums]
    if missing:
        raise InputError(f"no records for stations {missing}")
    empty = [s for s in ids if not counts[s].all()]
    if empty:
        raise InputError(f"stations with days never observed: {empty}")
    values = np.array([sums[s] / counts[s] for s in ids])
    return ids, np.arange(1, 366, dtype=float), values
