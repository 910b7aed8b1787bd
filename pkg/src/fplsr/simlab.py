"""Monte-Carlo study of PLS-based function-on-function regression.

Every random draw comes from a counter-based generator (Philox) keyed by
``(master seed, replication index, variable tag)``; replications are
therefore reproducible one at a time and independent of execution order.
"""

from __future__ import annotations

import csv
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .basis import eval_basis, make_bspline
from .errors import FitFailure, InputError, SmoothingError
from .fdata import smooth_curves
from .ffrm import ALGORITHMS, DEFAULT_GRID, amse, fit_ffr, predict_response

log = logging.getLogger(__name__)

__all__ = [
    "SimConfig",
    "ExperimentRecord",
    "ReplicationResult",
    "SimData",
    "Stream",
    "error_covariance",
    "draw_error_coefs",
    "gen_dataset",
    "run_replication",
    "run_experiment",
    "config_from_dict",
    "write_records_csv",
    "write_replications_csv",
    "RECORD_COLUMNS",
    "REPLICATION_COLUMNS",
]

DOMAIN = (-1.0, 1.0)
A1_MEAN, A1_SD = 2.0, 0.02
A2_MEAN, A2_SD = -3.0, 0.04

_TAGS = {"points_s": 1, "points_t": 2, "params": 3, "noise_x": 4, "noise_y": 5, "errors": 6}

RECORD_COLUMNS = (
    "method", "K", "rho", "mean_amse", "se_amse", "mean_amse_p", "se_amse_p",
    "mean_fit_seconds", "failures",
)
REPLICATION_COLUMNS = ("method", "K", "rho", "rep", "amse", "amse_p", "fit_seconds", "failed")


class Stream:
    """Deterministic random streams for one replication."""

    def __init__(self, seed: int, rep: int):
        self.seed = int(seed)
        self.rep = int(rep)

    def generator(self, tag: str) -> np.random.Generator:
        ss = np.random.SeedSequence([self.seed, self.rep, _TAGS[tag]])
        return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class SimConfig:
    """One cell of the simulation design.

    ``noise_sd`` scales the pointwise observation noise (1 in the reference
    design); setting it to 0 gives noiseless data for testing.
    """

    N: int = 100
    rho: float = 0.5
    n_points: int = 50
    K: int = 10
    h: int = 5
    mc: int = 100
    seed: int = 0
    methods: tuple[str, ...] = ALGORITHMS
    noise_sd: float = 1.0
    grid_size: int = DEFAULT_GRID

    def __post_init__(self):
        if self.N < 4 or self.N % 2:
            raise InputError(f"N must be even and >= 4, got {self.N}")
        if not self.rho > 0:
            raise InputError("rho must be positive")
        if self.mc < 1:
            raise InputError("mc must be >= 1")
        if self.n_points < 3:
            raise InputError("n_points must be >= 3")
        if self.K < 4:
            raise InputError("K must be >= 4 for cubic splines")
        bad = [m for m in self.methods if m not in ALGORITHMS]
        if bad or not self.methods:
            raise InputError(f"unknown methods {bad}")
        if self.noise_sd < 0:
            raise InputError("noise_sd must be nonnegative")


class SimData(NamedTuple):
    s: np.ndarray
    X: np.ndarray
    t: np.ndarray
    Y: np.ndarray


@dataclass(frozen=True)
class ReplicationResult:
    method: str
    amse: float
    amse_p: float
    fit_seconds: float
    failed: bool = False
    reason: str = ""


@dataclass(frozen=True)
class ExperimentRecord:
    method: str
    K: int
    rho: float
    mean_amse: float | None
    se_amse: float | None
    mean_amse_p: float | None
    se_amse_p: float | None
    mean_fit_seconds: float | None
    failures: int
    replications: tuple[ReplicationResult, ...] = field(default=(), repr=False, compare=False)


def error_covariance(K: int, rho: float) -> np.ndarray:
    """``Sigma[k, l] = rho * 0.5**|k - l|``."""
    k = np.arange(K)
    return rho * 0.5 ** np.abs(k[:, None] - k[None, :])


def draw_error_coefs(N: int, rho: float, K: int, rng: np.random.Generator) -> np.ndarray:
    """``N`` Gaussian coefficient vectors with covariance ``error_covariance(K, rho)``."""
    L = np.linalg.cholesky(error_covariance(K, rho))
    return rng.standard_normal((N, K)) @ L.T


def gen_dataset(
    N: int, rho: float, n_points: int, K_err: int, stream: Stream, noise_sd: float = 1.0
) -> SimData:
    """Draw one dataset of paired predictor/response curves on [-1, 1].

    Predictors are ``cos(exp(a1 s)) + a2 s`` and responses
    ``sin(exp(a1 t)) + a2 t + 2 t**2 + e_i . phi(t)``, both observed with
    N(0, noise_sd**2) noise at shared sorted uniform points.
    """
    s = np.sort(stream.generator("points_s").uniform(*DOMAIN, n_points))
    t = np.sort(stream.generator("points_t").uniform(*DOMAIN, n_points))
    prm = stream.generator("params").standard_normal((N, 2))
    a1 = (A1_MEAN + A1_SD * prm[:, 0])[:, None]
    a2 = (A2_MEAN + A2_SD * prm[:, 1])[:, None]
    X = np.cos(np.exp(a1 * s)) + a2 * s
    X = X + noise_sd * stream.generator("noise_x").standard_normal((N, n_points))
    e = draw_error_coefs(N, rho, K_err, stream.generator("errors"))
    err_curves = e @ eval_basis(make_bspline(DOMAIN, K_err), t).T
    Y = np.sin(np.exp(a1 * t)) + a2 * t + 2.0 * t**2 + err_curves
    Y = Y + noise_sd * stream.generator("noise_y").standard_normal((N, n_points))
    return SimData(s, X, t, Y)


def run_replication(cfg: SimConfig, rep_index: int) -> dict[str, ReplicationResult]:
    """Simulate, smooth, fit on the first half, score on both halves.

    Raises
    ------
    SmoothingError
        If either variable cannot be smoothed; the replication is void.
    """
    data = gen_dataset(cfg.N, cfg.rho, cfg.n_points, cfg.K, Stream(cfg.seed, rep_index), cfg.noise_sd)
    bs = make_bspline(DOMAIN, cfg.K)
    xs, _ = smooth_curves(data.X, data.s, bs)
    ys, _ = smooth_curves(data.Y, data.t, bs)
    half = cfg.N // 2
    x_tr, x_te = xs.take(slice(0, half)), xs.take(slice(half, None))
    y_tr, y_te = ys.take(slice(0, half)), ys.take(slice(half, None))
    out = {}
    for method in cfg.methods:
        try:
            t0 = time.perf_counter()
            model = fit_ffr(y_tr, [x_tr], h=cfg.h, algorithm=method)
            elapsed = time.perf_counter() - t0
            a = amse(y_tr, predict_response(model, [x_tr]), cfg.grid_size)
            ap = amse(y_te, predict_response(model, [x_te]), cfg.grid_size)
            if not (math.isfinite(a) and math.isfinite(ap)):
                raise FitFailure("non-finite error")
            out[method] = ReplicationResult(method, a, ap, elapsed)
        except (FitFailure, np.linalg.LinAlgError) as exc:
            out[method] = ReplicationResult(method, math.nan, math.nan, math.nan, True, str(exc))
    return out


def _safe_replication(cfg: SimConfig, rep: int) -> dict[str, ReplicationResult]:
    try:
        return run_replication(cfg, rep)
    except SmoothingError as exc:
        log.warning("replication %d (K=%d, rho=%g) aborted: %s", rep, cfg.K, cfg.rho, exc)
        return {
            m: ReplicationResult(m, math.nan, math.nan, math.nan, True, f"smoothing: {exc}")
            for m in cfg.methods
        }


def _mean_se(values: list[float]) -> tuple[float | None, float | None]:
    if not values:
        return None, None
    arr = np.array(values)
    se = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
    return float(arr.mean()), se


def _aggregate(cfg: SimConfig, reps: list[dict[str, ReplicationResult]]) -> list[ExperimentRecord]:
    records = []
    for method in cfg.methods:
        rows = tuple(r[method] for r in reps)
        ok = [r for r in rows if not r.failed]
        m_a, se_a = _mean_se([r.amse for r in ok])
        m_p, se_p = _mean_se([r.amse_p for r in ok])
        fit_s = float(np.mean([r.fit_seconds for r in ok])) if ok else None
        records.append(
            ExperimentRecord(method, cfg.K, cfg.rho, m_a, se_a, m_p, se_p, fit_s,
                             len(rows) - len(ok), rows)
        )
    return records


def _job(args):
    cfg, rep = args
    return _safe_replication(cfg, rep)


def _workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get("FPLSR_THREADS", "1") or 1)
    return max(1, workers)


def run_experiment(
    cfg: SimConfig,
    rhos: Sequence[float] | None = None,
    Ks: Sequence[int] | None = None,
    workers: int | None = None,
) -> list[ExperimentRecord]:
    """Run ``cfg.mc`` replications for every (rho, K) cell.

    Cells are ordered by rho, then K, then method. ``workers`` (default:
    ``$FPLSR_THREADS`` or 1) sets process-level parallelism; results are
    identical for any value.
    """
    rhos = [cfg.rho] if rhos is None else list(rhos)
    Ks = [cfg.K] if Ks is None else list(Ks)
    if not rhos or not Ks:
        raise InputError("experiment grid is empty")
    cells = [replace(cfg, rho=float(r), K=int(k)) for r in rhos for k in Ks]
    jobs = [(c, rep) for c in cells for rep in range(cfg.mc)]
    n = _workers(workers)
    if n == 1:
        results = [_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n) as ex:
            results = list(ex.map(_job, jobs, chunksize=max(1, len(jobs) // (4 * n))))
    records = []
    for i, c in enumerate(cells):
        records.extend(_aggregate(c, results[i * cfg.mc : (i + 1) * cfg.mc]))
    return records


def config_from_dict(d: dict) -> tuple[SimConfig, list[float], list[int]]:
    """Parse a JSON-style config; ``rho`` and ``K`` may be scalars or lists."""
    if not isinstance(d, dict):
        raise InputError("config must be a JSON object")
    known = {f.name for f in fields(SimConfig)}
    unknown = set(d) - known
    if unknown:
        raise InputError(f"unknown config keys: {sorted(unknown)}")
    d = dict(d)
    try:
        rhos = [float(v) for v in np.atleast_1d(d.pop("rho", SimConfig.rho))]
        Ks = [int(v) for v in np.atleast_1d(d.pop("K", SimConfig.K))]
        if "methods" in d:
            d["methods"] = tuple(d["methods"])
        for key in ("N", "n_points", "h", "mc", "seed", "grid_size"):
            if key in d:
                if isinstance(d[key], bool) or int(d[key]) != d[key]:
                    raise InputError(f"{key} must be an integer")
                d[key] = int(d[key])
        if "noise_sd" in d:
            d["noise_sd"] = float(d["noise_sd"])
        if not rhos or not Ks:
            raise InputError("rho and K must be nonempty")
        cfg = SimConfig(rho=rhos[0], K=Ks[0], **d)
        for r in rhos:
            replace(cfg, rho=r)
        for k in Ks:
            replace(cfg, K=k)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"invalid config: {exc}") from exc
    return cfg, rhos, Ks


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "nan" if math.isnan(v) else format(v, ".17g")
    return str(v)


def write_records_csv(path, records: Iterable[ExperimentRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_COLUMNS)
        for r in records:
            d = asdict(r)
            w.writerow([_fmt(d[c]) for c in RECORD_COLUMNS])


def write_replications_csv(path, records: Iterable[ExperimentRecord]) -> None:
    """Per-replication losses, e.g. for an external model-confidence-set analysis."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPLICATION_COLUMNS)
        for r in records:
            for i, rep in enumerate(r.replications):
                w.writerow([r.method, r.K, _fmt(r.rho), i, _fmt(rep.amse), _fmt(rep.amse_p),
                            _fmt(rep.fit_seconds), int(rep.failed)])
