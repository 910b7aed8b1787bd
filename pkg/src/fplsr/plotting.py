"""Static SVG figures and a text summary for experiment CSVs.

Figures are built on bare :class:`matplotlib.figure.Figure` objects (no
pyplot state) under a fixed rc context, with SVG ids salted and dates
stripped, so identical input gives identical bytes.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib
from matplotlib.figure import Figure

from .errors import InputError
from .simlab import RECORD_COLUMNS

__all__ = ["STYLE", "read_experiment_csv", "plot_rho_panel", "plot_timing", "summary_text", "render_report"]

STYLE = {
    "svg.hashsalt": "fplsr",
    "svg.fonttype": "none",
    "font.family": "sans-serif",
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "lines.linewidth": 1.2,
    "lines.markersize": 4,
    "figure.dpi": 100,
    "path.simplify": False,
}

METHOD_STYLE = {
    "nipals": dict(color="#1b9e77", marker="o", linestyle="-"),
    "simpls": dict(color="#d95f02", marker="s", linestyle="--"),
    "ridge": dict(color="#7570b3", marker="^", linestyle=":"),
}
_SVG_META = {"Date": None, "Creator": None}
DODGE = 0.4


def _num(v):
    return None if v in ("", None) else float(v)


def read_experiment_csv(path) -> list[dict]:
    """Rows of an experiment CSV with numeric fields parsed; blanks become None."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            body = [r for r in reader if r]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if header is None or tuple(h.strip() for h in header) != RECORD_COLUMNS:
        raise InputError(f"{path}: expected columns {','.join(RECORD_COLUMNS)}")
    rows = []
    for r in body:
        if len(r) != len(RECORD_COLUMNS):
            raise InputError(f"{path}: ragged row {r}")
        d = dict(zip(RECORD_COLUMNS, r))
        try:
            rows.append({
                "method": d["method"],
                "K": int(d["K"]),
                "rho": float(d["rho"]),
                "failures": int(d["failures"]),
                **{c: _num(d[c]) for c in RECORD_COLUMNS[3:-1]},
            })
        except ValueError as exc:
            raise InputError(f"{path}: {exc}") from exc
    return rows


def _methods(rows):
    seen = []
    for r in rows:
        if r["method"] not in seen:
            seen.append(r["method"])
    return seen


def _series(rows, method, key, rho=None):
    pts = sorted(
        (r["K"], r[key], r.get("se_" + key[5:]) if key.startswith("mean_") else None)
        for r in rows
        if r["method"] == method and (rho is None or r["rho"] == rho) and r[key] is not None
    )
    return pts


def _save(fig: Figure, path) -> None:
    fig.savefig(path, format="svg", metadata=_SVG_META)


def plot_rho_panel(rows: list[dict], rho: float, path) -> None:
    """AMSE and AMSE_p against K, one line per method, for one rho."""
    with matplotlib.rc_context(STYLE):
        fig = Figure(figsize=(7.0, 3.0))
        axes = fig.subplots(1, 2)
        methods = _methods(rows)
        for ax, key, label in zip(axes, ("mean_amse", "mean_amse_p"), ("AMSE", "AMSE$_p$")):
            for i, m in enumerate(methods):
                pts = _series(rows, m, key, rho)
                if not pts:
                    continue
                K, y, se = zip(*pts)
                se = [0.0 if s is None else s for s in se]
                # dodge so error bars of close methods stay readable
                dx = DODGE * (i - (len(methods) - 1) / 2)
                ax.errorbar([k + dx for k in K], y, yerr=se, label=m, capsize=2, **METHOD_STYLE.get(m, {}))
            ax.set_xlabel("number of basis functions K")
            ax.set_ylabel(label)
            ax.set_title(f"{label}, rho = {rho:g}")
        if axes[0].get_legend_handles_labels()[0]:
            axes[0].legend(frameon=False)
        fig.tight_layout()
        _save(fig, path)


def plot_timing(rows: list[dict], path) -> None:
    """Mean fit time against K per method, averaged over rho."""
    with matplotlib.rc_context(STYLE):
        fig = Figure(figsize=(3.6, 3.0))
        ax = fig.subplots()
        for m in _methods(rows):
            by_k: dict[int, list[float]] = {}
            for r in rows:
                if r["method"] == m and r["mean_fit_seconds"] is not None:
                    by_k.setdefault(r["K"], []).append(r["mean_fit_seconds"])
            if not by_k:
                continue
            K = sorted(by_k)
            y = [sum(by_k[k]) / len(by_k[k]) for k in K]
            ax.plot(K, y, label=m, **METHOD_STYLE.get(m, {}))
        ax.set_xlabel("number of basis functions K")
        ax.set_ylabel("mean fit time (s)")
        ax.set_title("computing time")
        if ax.get_legend_handles_labels()[0]:
            ax.set_yscale("log")
            ax.legend(frameon=False)
        fig.tight_layout()
        _save(fig, path)


def summary_text(rows: list[dict]) -> str:
    lines = ["method   K    rho      AMSE (se)                AMSE_p (se)              fit s      fail"]
    for r in sorted(rows, key=lambda r: (r["rho"], r["K"], r["method"])):
        def cell(mean, se):
            if mean is None:
                return "-".ljust(24)
            return f"{mean:.6g} ({(se or 0.0):.3g})".ljust(24)

        fit = "-" if r["mean_fit_seconds"] is None else f"{r['mean_fit_seconds']:.3g}"
        lines.append(
            f"{r['method']:<8} {r['K']:<4} {r['rho']:<8g} {cell(r['mean_amse'], r['se_amse'])} "
            f"{cell(r['mean_amse_p'], r['se_amse_p'])} {fit:<10} {r['failures']}"
        )
    cells = sorted({(r["rho"], r["K"]) for r in rows})
    if cells:
        lines.append("")
        lines.append("lowest mean AMSE_p per cell:")
    for rho, K in cells:
        cand = [r for r in rows if r["rho"] == rho and r["K"] == K and r["mean_amse_p"] is not None]
        if cand:
            best = min(cand, key=lambda r: r["mean_amse_p"])
            lines.append(f"  rho={rho:g} K={K}: {best['method']}")
    return "\n".join(lines) + "\n"


def _rho_name(rho: float) -> str:
    return f"{rho:g}".replace(".", "p").replace("-", "m")


def render_report(csv_path, out_dir) -> list[Path]:
    """Write one SVG per rho, a timing SVG and ``summary.txt``; returns the paths."""
    rows = read_experiment_csv(csv_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for rho in sorted({r["rho"] for r in rows}):
        p = out / f"amse_rho{_rho_name(rho)}.svg"
        plot_rho_panel(rows, rho, p)
        written.append(p)
    p = out / "timing.svg"
    plot_timing(rows, p)
    written.append(p)
    p = out / "summary.txt"
    p.write_text(summary_text(rows))
    written.append(p)
    return written
