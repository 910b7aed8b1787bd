"""Curve CSV and JSON helpers.

Curve files come in two layouts:

``col``
    header ``arg,<id1>,<id2>,...``; first column holds argvals, every other
    column is one curve.
``row``
    header ``id,<arg1>,<arg2>,...``; every row after the header is one curve.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError

__all__ = ["CurveTable", "read_curve_csv", "write_curve_csv", "read_json", "write_json", "fmt"]

ORIENTATIONS = ("col", "row")


@dataclass(frozen=True, eq=False)
class CurveTable:
    ids: tuple[str, ...]
    argvals: np.ndarray
    obs: np.ndarray  # (N, J)

    @property
    def n_curves(self) -> int:
        return self.obs.shape[0]


def fmt(v: float) -> str:
    """17 significant digits, so values read back bit-for-bit."""
    v = float(v)
    return "nan" if math.isnan(v) else format(v, ".17g")


def _floats(cells, where):
    try:
        return [float(c) for c in cells]
    except ValueError as exc:
        raise InputError(f"{where}: {exc}") from exc


def read_curve_csv(path, orientation: str = "col") -> CurveTable:
    if orientation not in ORIENTATIONS:
        raise InputError(f"orientation must be one of {ORIENTATIONS}")
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if len(rows) < 2:
        raise InputError(f"{path}: need a header and at least one data row")
    header, body = rows[0], rows[1:]
    width = len(header)
    if width < 2 or any(len(r) != width for r in body):
        raise InputError(f"{path}: ragged rows")
    if orientation == "col":
        ids = tuple(h.strip() for h in header[1:])
        table = np.array([_floats(r, f"{path}") for r in body])
        argvals, obs = table[:, 0], table[:, 1:].T
    else:
        argvals = np.array(_floats(header[1:], f"{path} header"))
        ids = tuple(r[0].strip() for r in body)
        obs = np.array([_floats(r[1:], f"{path}") for r in body])
    if not np.all(np.isfinite(argvals)) or np.any(np.diff(argvals) <= 0):
        raise InputError(f"{path}: argvals must be finite and strictly increasing")
    if not np.all(np.isfinite(obs)):
        raise InputError(f"{path}: missing or non-finite observations")
    return CurveTable(ids, argvals, obs)


def write_curve_csv(path, argvals, obs, ids=None, orientation: str = "col", float_format=fmt) -> None:
    obs = np.atleast_2d(np.asarray(obs, dtype=float))
    argvals = np.asarray(argvals, dtype=float)
    if ids is None:
        ids = [f"c{i + 1}" for i in range(obs.shape[0])]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if orientation == "col":
            w.writerow(["arg", *ids])
            for j, a in enumerate(argvals):
                w.writerow([float_format(a), *(float_format(v) for v in obs[:, j])])
        elif orientation == "row":
            w.writerow(["id", *(float_format(a) for a in argvals)])
            for i, row in zip(ids, obs):
                w.writerow([i, *(float_format(v) for v in row)])
        else:
            raise InputError(f"orientation must be one of {ORIENTATIONS}")


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read JSON from {path}: {exc}") from exc


def write_json(path, obj) -> None:
    # json emits repr() floats, which round-trip exactly
    Path(path).write_text(json.dumps(obj, indent=1, allow_nan=False) + "\n")
