"""Function-on-function regression fitted by PLS in basis-coefficient space.

Curves enter the regression through the half-metric transform: a predictor
with coefficients ``d`` over a basis with Gram matrix ``G`` becomes
``d @ sqrt(G)``, so Euclidean inner products of transformed rows equal L2
inner products of the curves. PLS (or the ridge baseline) regresses the
transformed response on the transformed predictors, and the coefficient
matrix is mapped back to per-predictor surfaces
``beta_m(s, t) = psi_m(s) @ B_m @ phi(t)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .basis import BasisSystem, GramMatrix, SqrtPair, eval_basis, gram_matrix, psd_sqrt
from .errors import FitFailure, InputError
from .fdata import CurveSet, center, eval_curves
from .pls import PlsModel, nipals_fit, simpls_fit

__all__ = [
    "ALGORITHMS",
    "DesignBundle",
    "FfrModel",
    "build_design",
    "fit_ffr",
    "coefficient_surface",
    "predict_response",
    "intercept",
    "amse",
]

ALGORITHMS = ("nipals", "simpls", "ridge")
DEFAULT_H = 5
DEFAULT_GRID = 101
# ridge penalties, relative to the mean eigenvalue of Xd^T Xd
RIDGE_GRID = tuple(np.logspace(-8, 2, 41))


@dataclass(frozen=True, eq=False)
class DesignBundle:
    """Half-metric design ``Xd`` (blocks ``D_m @ sqrt(G_m)``) and response ``Yd``."""

    Xd: np.ndarray
    Yd: np.ndarray
    offsets: tuple[int, ...]
    widths: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class FfrModel:
    """A fitted function-on-function regression.

    ``blocks[m]`` is the ``(K_m, K_Y)`` coefficient matrix of predictor ``m``;
    ``xi`` is the coefficient matrix of the half-metric regression it was
    recovered from. ``pls`` is None for the ridge baseline, which stores
    its penalty in ``ridge_theta`` instead.
    """

    response_basis: BasisSystem
    response_mean: np.ndarray
    response_gram: GramMatrix
    response_sqrt: SqrtPair
    predictor_bases: tuple[BasisSystem, ...]
    predictor_means: tuple[np.ndarray, ...]
    predictor_grams: tuple[GramMatrix, ...]
    predictor_sqrts: tuple[SqrtPair, ...]
    xi: np.ndarray
    blocks: tuple[np.ndarray, ...]
    algorithm: str
    h: int | None
    pls: PlsModel | None = None
    ridge_theta: float | None = None

    @property
    def truncated(self) -> bool:
        return self.pls is not None and self.pls.truncated

    @property
    def n_predictors(self) -> int:
        return len(self.predictor_bases)

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "h": self.h,
            "ridge_theta": self.ridge_theta,
            "response_basis": self.response_basis.to_dict(),
            "response_mean": self.response_mean.tolist(),
            "predictors": [
                {"basis": bs.to_dict(), "mean": mu.tolist(), "B": B.tolist()}
                for bs, mu, B in zip(self.predictor_bases, self.predictor_means, self.blocks)
            ],
            "xi": self.xi.tolist(),
            "pls": None if self.pls is None else self.pls.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FfrModel":
        try:
            rb = BasisSystem.from_dict(d["response_basis"])
            pbs = tuple(BasisSystem.from_dict(p["basis"]) for p in d["predictors"])
            rgram = gram_matrix(rb)
            pgrams = tuple(gram_matrix(bs) for bs in pbs)
            return cls(
                response_basis=rb,
                response_mean=np.asarray(d["response_mean"], dtype=float),
                response_gram=rgram,
                response_sqrt=psd_sqrt(rgram.values),
                predictor_bases=pbs,
                predictor_means=tuple(np.asarray(p["mean"], dtype=float) for p in d["predictors"]),
                predictor_grams=pgrams,
                predictor_sqrts=tuple(psd_sqrt(g.values) for g in pgrams),
                xi=np.asarray(d["xi"], dtype=float),
                blocks=tuple(np.asarray(p["B"], dtype=float) for p in d["predictors"]),
                algorithm=d["algorithm"],
                h=None if d["h"] is None else int(d["h"]),
                pls=None if d.get("pls") is None else PlsModel.from_dict(d["pls"]),
                ridge_theta=d.get("ridge_theta"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"invalid model description: {exc}") from exc


def _check_sets(response: CurveSet, predictors: Sequence[CurveSet]) -> None:
    if not predictors:
        raise InputError("at least one predictor is required")
    n = response.n_curves
    if any(p.n_curves != n for p in predictors):
        raise InputError("response and predictors must hold the same number of curves")
    if n < 2:
        raise InputError("need at least two curves")


def _design(response, predictors):
    _check_sets(response, predictors)
    yc, y_mean = center(response)
    rgram = gram_matrix(response.basis)
    rsqrt = psd_sqrt(rgram.values)
    blocks, means, grams, sqrts = [], [], [], []
    for p in predictors:
        pc, mu = center(p)
        g = gram_matrix(p.basis)
        sq = psd_sqrt(g.values)
        blocks.append(pc.coef @ sq.sqrt)
        means.append(mu)
        grams.append(g)
        sqrts.append(sq)
    widths = tuple(b.shape[1] for b in blocks)
    offsets = tuple(int(v) for v in np.cumsum((0,) + widths[:-1]))
    bundle = DesignBundle(np.hstack(blocks), yc.coef @ rsqrt.sqrt, offsets, widths)
    return bundle, y_mean, means, rgram, rsqrt, grams, sqrts


def build_design(
    response: CurveSet, predictors: Sequence[CurveSet]
) -> tuple[DesignBundle, tuple[np.ndarray, list[np.ndarray]]]:
    """Center all curve sets and assemble the half-metric regression.

    Returns the design bundle and ``(response_mean, predictor_means)``.
    """
    bundle, y_mean, means, *_ = _design(response, predictors)
    return bundle, (y_mean, means)


def _ridge(Xd, Yd, theta, grid):
    n, p = Xd.shape
    XtX = Xd.T @ Xd
    XtY = Xd.T @ Yd
    s, V = np.linalg.eigh((XtX + XtX.T) / 2.0)
    s = np.clip(s, 0.0, None)
    VtXtY = V.T @ XtY
    smax = s[-1] if s.size else 0.0

    def solve(th):
        d = s + th
        if d.min() <= p * np.finfo(float).eps * max(smax, th):
            return None
        return V @ (VtXtY / d[:, None]), float(np.sum(s / d))

    if theta is not None:
        sol = solve(float(theta))
        if sol is None:
            raise FitFailure(f"normal equations singular at theta={theta}")
        return sol[0], float(theta)
    scale = float(np.mean(s))
    best = None
    for tau in grid:
        th = tau * scale
        sol = solve(th)
        if sol is None:
            continue
        B, tr = sol
        dof = n - tr
        if dof <= 0:
            continue
        score = n * float(np.sum((Yd - Xd @ B) ** 2)) / dof**2
        if np.isfinite(score) and (best is None or score < best[0]):
            best = (score, B, th)
    if best is None:
        raise FitFailure("ridge normal equations singular for every penalty in the grid")
    return best[1], best[2]


def fit_ffr(
    response: CurveSet,
    predictors: Sequence[CurveSet],
    h: int = DEFAULT_H,
    algorithm: str = "simpls",
    ridge_theta: float | None = None,
    ridge_grid: Sequence[float] = RIDGE_GRID,
) -> FfrModel:
    """Fit a function-on-function regression.

    Parameters
    ----------
    response : CurveSet
        Response curves, one per observation.
    predictors : sequence of CurveSet
        One curve set per functional predictor, rows aligned with
        ``response``.
    h : int, default 5
        Number of PLS components (ignored by ``"ridge"``).
    algorithm : {"nipals", "simpls", "ridge"}
    ridge_theta : float, optional
        Fixed ridge penalty; ``0`` gives plain least squares. When omitted
        the penalty is chosen by GCV over ``ridge_grid`` (relative to the
        mean eigenvalue of the design cross-product).

    Raises
    ------
    FitFailure
        When the ridge/least-squares normal equations cannot be solved.
    """
    if algorithm not in ALGORITHMS:
        raise InputError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
    bundle, y_mean, means, rgram, rsqrt, grams, sqrts = _design(response, predictors)
    pls = None
    theta = None
    if algorithm == "ridge":
        xi, theta = _ridge(bundle.Xd, bundle.Yd, ridge_theta, ridge_grid)
        h = None
    else:
        fitter = nipals_fit if algorithm == "nipals" else simpls_fit
        pls = fitter(bundle.Xd, bundle.Yd, h)
        xi = pls.B
    blocks = tuple(
        sq.inv_sqrt @ xi[o : o + w] @ rsqrt.inv_sqrt
        for sq, o, w in zip(sqrts, bundle.offsets, bundle.widths)
    )
    return FfrModel(
        response_basis=response.basis,
        response_mean=y_mean,
        response_gram=rgram,
        response_sqrt=rsqrt,
        predictor_bases=tuple(p.basis for p in predictors),
        predictor_means=tuple(means),
        predictor_grams=tuple(grams),
        predictor_sqrts=tuple(sqrts),
        xi=xi,
        blocks=blocks,
        algorithm=algorithm,
        h=h,
        pls=pls,
        ridge_theta=theta,
    )


def coefficient_surface(model: FfrModel, m: int, sgrid, tgrid) -> np.ndarray:
    """Evaluate ``beta_m`` on the product grid; shape ``(len(sgrid), len(tgrid))``."""
    if not 0 <= m < model.n_predictors:
        raise InputError(f"predictor index {m} out of range")
    Es = eval_basis(model.predictor_bases[m], sgrid)
    Et = eval_basis(model.response_basis, tgrid)
    return Es @ model.blocks[m] @ Et.T


def predict_response(model: FfrModel, new_predictors: Sequence[CurveSet]) -> CurveSet:
    """Predict response curves for new predictor curves."""
    if len(new_predictors) != model.n_predictors:
        raise InputError(
            f"model has {model.n_predictors} predictors, got {len(new_predictors)}"
        )
    n = new_predictors[0].n_curves
    coef = np.zeros((n, model.response_basis.n_basis))
    for p, bs, mu, g, B in zip(
        new_predictors, model.predictor_bases, model.predictor_means, model.predictor_grams, model.blocks
    ):
        if p.basis != bs:
            raise InputError("predictor basis differs from the basis the model was fitted on")
        if p.n_curves != n:
            raise InputError("new predictors hold different numbers of curves")
        coef += ((p.coef - mu) @ g.values) @ B
    return CurveSet(model.response_basis, coef + model.response_mean)


def intercept(model: FfrModel) -> np.ndarray:
    """Coefficients of ``beta_0(t)``: mean response minus the mean predictors' contribution."""
    b0 = model.response_mean.copy()
    for mu, g, B in zip(model.predictor_means, model.predictor_grams, model.blocks):
        b0 -= (mu @ g.values) @ B
    return b0


def amse(observed: CurveSet, predicted: CurveSet, grid_size: int = DEFAULT_GRID) -> float:
    """Average over curves of the mean squared difference on an even grid."""
    if observed.n_curves != predicted.n_curves:
        raise InputError("observed and predicted hold different numbers of curves")
    if observed.basis.domain != predicted.basis.domain:
        raise InputError("observed and predicted live on different domains")
    if grid_size < 2:
        raise InputError("grid_size must be at least 2")
    a, b = observed.basis.domain
    grid = np.linspace(a, b, grid_size)
    diff = eval_curves(observed, grid) - eval_curves(predicted, grid)
    return float(np.mean(np.mean(diff**2, axis=1)))
