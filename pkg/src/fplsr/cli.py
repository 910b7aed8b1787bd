"""Command-line front end.

Exit codes: 0 success, 2 input or configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .basis import BasisSystem, make_bspline
from .errors import FitFailure, InputError, NotPSDError, SmoothingError
from .fdata import CurveSet, eval_curves, select_nbasis, smooth_curves
from .ffrm import ALGORITHMS, DEFAULT_GRID, FfrModel, amse, coefficient_surface, fit_ffr, predict_response
from .io import fmt, read_curve_csv, read_json, write_curve_csv, write_json
from .plotting import render_report
from .simlab import config_from_dict, run_experiment, write_records_csv, write_replications_csv

log = logging.getLogger("fplsr")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


@dataclass
class RunManifest:
    command: str
    config_path: str | None
    input_paths: list[str]
    output_dir: str
    seed: int | None
    tool_version: str = __version__
    wall_clock_seconds: float = 0.0
    outputs: list[str] = field(default_factory=list)


def _parse_nbasis(text: str) -> list[int]:
    try:
        ks = [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"--nbasis expects K or K1,K2,...: {text!r}") from exc
    if not ks or min(ks) < 1:
        raise InputError(f"--nbasis expects positive integers: {text!r}")
    return ks


def _smooth_table(table, ks: list[int]) -> tuple[CurveSet, dict]:
    domain = (float(table.argvals[0]), float(table.argvals[-1]))
    if len(ks) == 1:
        cs, rep = smooth_curves(table.obs, table.argvals, make_bspline(domain, ks[0]))
    else:
        cs, rep = select_nbasis(table.obs, table.argvals, domain, ks)
    info = {"n_basis": cs.basis.n_basis, "lambda": rep.lam, "gcv": rep.gcv, "edf": rep.edf}
    return cs, info


def _smooth_onto(table, bs: BasisSystem) -> CurveSet:
    a, b = bs.domain
    if table.argvals[0] < a or table.argvals[-1] > b:
        raise InputError(f"argvals [{table.argvals[0]}, {table.argvals[-1]}] outside model domain [{a}, {b}]")
    cs, _ = smooth_curves(table.obs, table.argvals, bs)
    return cs


def cmd_fit(args) -> list[Path]:
    ks = _parse_nbasis(args.nbasis)
    resp = read_curve_csv(args.response, args.orientation)
    preds = [read_curve_csv(p, args.orientation) for p in args.predictors]
    if any(p.n_curves != resp.n_curves for p in preds):
        raise InputError("response and predictor files hold different numbers of curves")
    y_cs, y_info = _smooth_table(resp, ks)
    smoothed = [_smooth_table(p, ks) for p in preds]
    x_cs = [s[0] for s in smoothed]
    model = fit_ffr(y_cs, x_cs, h=args.components, algorithm=args.method)
    if model.truncated:
        log.warning("PLS stopped after %d components (no covariance left)", model.pls.h)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    doc = {
        "version": __version__,
        "model": model.to_dict(),
        "smoothing": {
            "response": {**y_info, "file": str(args.response), "argvals": resp.argvals.tolist()},
            "predictors": [{**s[1], "file": str(f)} for s, f in zip(smoothed, args.predictors)],
        },
    }
    written = [out / "model.json"]
    write_json(written[0], doc)

    tgrid = np.linspace(*model.response_basis.domain, args.grid)
    for m, bs in enumerate(model.predictor_bases):
        sgrid = np.linspace(*bs.domain, args.grid)
        surf = coefficient_surface(model, m, sgrid, tgrid)
        p = out / f"surface_{m + 1}.csv"
        with open(p, "w") as fh:
            fh.write("s,t,value\n")
            for i, s in enumerate(sgrid):
                for j, t in enumerate(tgrid):
                    fh.write(f"{fmt(s)},{fmt(t)},{fmt(surf[i, j])}\n")
        written.append(p)

    fitted = eval_curves(predict_response(model, x_cs), resp.argvals)
    p = out / "fitted.csv"
    write_curve_csv(p, resp.argvals, fitted, resp.ids, args.orientation)
    written.append(p)
    print(f"fitted {args.method} model: {len(x_cs)} predictor(s), N={resp.n_curves}, "
          f"K_Y={y_cs.basis.n_basis}, K_X={[c.basis.n_basis for c in x_cs]}")
    return written


def cmd_predict(args) -> list[Path]:
    doc = read_json(args.model)
    if not isinstance(doc, dict) or "model" not in doc:
        raise InputError(f"{args.model}: not a model file")
    model = FfrModel.from_dict(doc["model"])
    if len(args.predictors) != model.n_predictors:
        raise InputError(f"model needs {model.n_predictors} predictor file(s), got {len(args.predictors)}")
    tables = [read_curve_csv(p, args.orientation) for p in args.predictors]
    if any(t.n_curves != tables[0].n_curves for t in tables):
        raise InputError("predictor files hold different numbers of curves")
    x_cs = [_smooth_onto(t, bs) for t, bs in zip(tables, model.predictor_bases)]
    pred = predict_response(model, x_cs)

    truth = read_curve_csv(args.truth, args.orientation) if args.truth else None
    if truth is not None:
        if truth.n_curves != pred.n_curves:
            raise InputError("truth file holds a different number of curves")
        argvals = truth.argvals
    else:
        try:
            argvals = np.asarray(doc["smoothing"]["response"]["argvals"], dtype=float)
        except (KeyError, TypeError):
            argvals = np.linspace(*model.response_basis.domain, args.grid)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    p = out / "predictions.csv"
    write_curve_csv(p, argvals, eval_curves(pred, argvals), tables[0].ids, args.orientation)
    written = [p]
    if truth is not None:
        observed = _smooth_onto(truth, model.response_basis)
        score = amse(observed, pred, args.grid)
        print(f"AMSE_p = {fmt(score)}")
        p = out / "metrics.json"
        write_json(p, {"amse_p": score, "grid_size": args.grid, "n_curves": pred.n_curves})
        written.append(p)
    return written


def cmd_simulate(args) -> list[Path]:
    raw = read_json(args.config)
    if isinstance(raw, dict) and args.seed is not None:
        raw = {**raw, "seed": args.seed}
    cfg, rhos, ks = config_from_dict(raw)
    if args.method:
        cfg = cfg.__class__(**{**asdict(cfg), "methods": (args.method,)})
    args.seed = cfg.seed
    records = run_experiment(cfg, rhos, ks)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    p1, p2 = out / "experiment.csv", out / "replications.csv"
    write_records_csv(p1, records)
    write_replications_csv(p2, records)
    for r in records:
        if r.failures:
            log.warning("%s K=%d rho=%g: %d/%d replications failed", r.method, r.K, r.rho, r.failures, cfg.mc)
    print(f"{len(records)} cells x {cfg.mc} replications written to {p1}")
    return [p1, p2]


def cmd_report(args) -> list[Path]:
    written = render_report(args.experiment, args.out)
    sys.stdout.write((Path(args.out) / "summary.txt").read_text())
    return written


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fplsr", description="Function-on-function regression by partial least squares."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, grid_help):
        p.add_argument("--out", default=".", help="output directory (default: current)")
        p.add_argument("--grid", type=int, default=DEFAULT_GRID, help=grid_help)
        p.add_argument("--orientation", choices=("col", "row"), default="col",
                       help="curve CSV layout: one curve per column (default) or per row")

    p = sub.add_parser("fit", help="smooth curve CSVs and fit a regression model")
    p.add_argument("response", help="response curve CSV")
    p.add_argument("predictors", nargs="+", help="predictor curve CSV(s)")
    p.add_argument("--nbasis", default="20", help="basis size K, or K1,K2,... to select by GCV")
    p.add_argument("--components", type=int, default=5, help="PLS components h (default 5)")
    p.add_argument("--method", choices=ALGORITHMS, default="simpls")
    common(p, "points per axis of the exported coefficient surfaces")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="predict response curves from a saved model")
    p.add_argument("model", help="model.json written by 'fit'")
    p.add_argument("predictors", nargs="+", help="new predictor curve CSV(s)")
    p.add_argument("--truth", help="observed responses; prints AMSE_p")
    common(p, "evaluation grid size for AMSE_p")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("simulate", help="run the Monte-Carlo experiment")
    p.add_argument("--config", required=True, help="JSON experiment configuration")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--method", choices=ALGORITHMS, help="run a single method")
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="render SVG figures and a summary from experiment.csv")
    p.add_argument("experiment", help="experiment CSV written by 'simulate'")
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.set_defaults(func=cmd_report)
    return parser


def _inputs(args) -> list[str]:
    names = []
    for key in ("response", "model", "experiment", "truth"):
        v = getattr(args, key, None)
        if v:
            names.append(str(v))
    names.extend(str(p) for p in getattr(args, "predictors", []) or [])
    return names


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "components", 1) < 1 or getattr(args, "grid", 2) < 2:
        parser.error("--components must be >= 1 and --grid >= 2")
    t0 = time.perf_counter()
    try:
        written = args.func(args)
    except (InputError, NotPSDError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (FitFailure, SmoothingError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    manifest = RunManifest(
        command=args.command,
        config_path=getattr(args, "config", None),
        input_paths=_inputs(args),
        output_dir=str(args.out),
        seed=getattr(args, "seed", None),
        wall_clock_seconds=time.perf_counter() - t0,
        outputs=[str(p) for p in written],
    )
    write_json(Path(args.out) / "manifest.json", asdict(manifest))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
