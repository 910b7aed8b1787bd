"""Curve sets in basis-coefficient form and penalized smoothing with GCV."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .basis import BasisSystem, eval_basis, make_bspline, penalty_matrix
from .errors import InputError, SmoothingError

__all__ = [
    "CurveSet",
    "SmoothReport",
    "DEFAULT_LAMBDA_GRID",
    "smooth_curves",
    "select_nbasis",
    "mean_curve",
    "center",
    "eval_curves",
]

DEFAULT_LAMBDA_GRID = tuple([0.0] + list(np.logspace(-10, 4, 41)))


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CurveSet:
    """N curves stored as an ``(N, K)`` coefficient matrix over ``basis``.

    ``argvals``/``obs`` optionally keep the discrete data the coefficients
    were estimated from.
    """

    basis: BasisSystem
    coef: np.ndarray
    argvals: np.ndarray | None = None
    obs: np.ndarray | None = None

    def __post_init__(self):
        coef = _frozen(self.coef)
        if coef.ndim == 1:
            coef = _frozen(coef[None, :])
        if coef.ndim != 2 or coef.shape[1] != self.basis.n_basis:
            raise InputError(
                f"coefficient matrix has shape {coef.shape}, basis has {self.basis.n_basis} functions"
            )
        if not np.all(np.isfinite(coef)):
            raise InputError("coefficients must be finite")
        object.__setattr__(self, "coef", coef)
        if (self.argvals is None) != (self.obs is None):
            raise InputError("argvals and obs must be given together")
        if self.argvals is not None:
            argvals = _frozen(self.argvals)
            obs = _frozen(self.obs)
            a, b = self.basis.domain
            if argvals.ndim != 1 or np.any(np.diff(argvals) <= 0):
                raise InputError("argvals must be strictly increasing")
            if argvals[0] < a or argvals[-1] > b:
                raise InputError("argvals fall outside the basis domain")
            if obs.shape != (coef.shape[0], argvals.size):
                raise InputError("obs shape does not match (N, len(argvals))")
            object.__setattr__(self, "argvals", argvals)
            object.__setattr__(self, "obs", obs)

    @property
    def n_curves(self) -> int:
        return self.coef.shape[0]

    def take(self, idx) -> "CurveSet":
        """Subset of curves, raw data included."""
        idx = np.arange(self.n_curves)[idx]
        if self.argvals is None:
            return CurveSet(self.basis, self.coef[idx])
        return CurveSet(self.basis, self.coef[idx], self.argvals, self.obs[idx])

    def to_dict(self) -> dict:
        return {"basis": self.basis.to_dict(), "coef": self.coef.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "CurveSet":
        try:
            return cls(BasisSystem.from_dict(d["basis"]), np.asarray(d["coef"], dtype=float))
        except KeyError as exc:
            raise InputError(f"missing field {exc} in curve set") from exc


@dataclass(frozen=True)
class SmoothReport:
    """Outcome of a GCV search.

    ``gcv_curve`` holds ``(lambda, score)`` for every accepted lambda.
    """

    lam: float
    gcv: float
    edf: float
    gcv_curve: tuple[tuple[float, float], ...] = field(default=())


def _penalty_root(R: np.ndarray) -> np.ndarray:
    mu, V = np.linalg.eigh(R)
    # rounding noise in the polynomial nullspace would be amplified by sqrt(lam)
    mu = np.where(mu > 1e-10 * max(mu[-1], 0.0), mu, 0.0)
    return np.sqrt(mu)[:, None] * V.T


def _penalized_svd(E, L, lam):
    # SVD of [E; sqrt(lam) L] avoids squaring the condition number
    M = np.vstack([E, np.sqrt(lam) * L]) if lam > 0 else E
    try:
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError:
        return None
    if s.size < E.shape[1] or s[-1] <= 1e-12 * s[0]:
        return None
    return U[: E.shape[0]], s, Vt


def smooth_curves(
    obs,
    argvals: Sequence[float],
    bs: BasisSystem,
    lambda_grid: Sequence[float] | None = None,
) -> tuple[CurveSet, SmoothReport]:
    """Convert discretely observed curves to B-spline coefficients.

    Each curve is fitted by penalized least squares with a curvature
    (second-derivative) penalty; one smoothing parameter, shared by all
    curves, is picked by generalized cross-validation::

        GCV(lam) = sum_i J * SSE_i(lam) / (J - tr H(lam))**2

    Parameters
    ----------
    obs : array_like of shape (N, J)
        One curve per row, observed at ``argvals``.
    argvals : sequence of float
        Strictly increasing sampling points inside ``bs.domain``.
    bs : BasisSystem
        Target basis.
    lambda_grid : sequence of float, optional
        Candidate smoothing parameters. Defaults to ``DEFAULT_LAMBDA_GRID``.

    Returns
    -------
    curves : CurveSet
    report : SmoothReport

    Raises
    ------
    SmoothingError
        When no candidate yields a nonsingular, well-defined fit.
    """
    Y = np.asarray(obs, dtype=float)
    if Y.ndim == 1:
        Y = Y[None, :]
    x = np.asarray(argvals, dtype=float)
    if Y.ndim != 2 or Y.shape[1] != x.size:
        raise InputError("obs must have shape (N, len(argvals))")
    J = x.size
    if J < 3:
        raise InputError("need at least 3 sampling points")
    if np.any(np.diff(x) <= 0):
        raise InputError("argvals must be strictly increasing")
    if not np.all(np.isfinite(Y)):
        raise InputError("observations must be finite")
    grid = DEFAULT_LAMBDA_GRID if lambda_grid is None else tuple(float(v) for v in lambda_grid)
    if not grid or any(v < 0 for v in grid):
        raise InputError("lambda grid must be nonempty and nonnegative")

    E = eval_basis(bs, x, 0)
    R = penalty_matrix(bs, 2) if bs.order > 2 else np.zeros((bs.n_basis, bs.n_basis))
    L = _penalty_root(R)

    curve = []
    best = None
    for lam in grid:
        dec = _penalized_svd(E, L, lam)
        if dec is None:
            continue
        UJ, sv, Vt = dec
        # hat matrix is UJ @ UJ.T
        tr = float(np.sum(UJ * UJ))
        dof = J - tr
        if dof <= 0:
            continue
        coef = (Y @ UJ / sv) @ Vt
        sse = ((Y - coef @ E.T) ** 2).sum(axis=1)
        score = float(np.sum(J * sse)) / dof**2
        if not np.isfinite(score):
            continue
        curve.append((lam, score))
        if best is None or score < best[1]:
            best = (lam, score, tr, coef)
    if best is None:
        raise SmoothingError(
            f"penalized normal equations singular for every lambda (K={bs.n_basis}, J={J})"
        )
    lam, score, tr, coef = best
    report = SmoothReport(lam=lam, gcv=score, edf=tr, gcv_curve=tuple(curve))
    return CurveSet(bs, coef, x, Y), report


def select_nbasis(
    obs,
    argvals: Sequence[float],
    domain: Sequence[float],
    candidates: Sequence[int],
    order: int = 4,
    lambda_grid: Sequence[float] | None = None,
) -> tuple[CurveSet, SmoothReport]:
    """Smooth with each candidate basis size and keep the lowest GCV."""
    best = None
    errors = []
    for K in candidates:
        bs = make_bspline(domain, int(K), order)
        try:
            cs, rep = smooth_curves(obs, argvals, bs, lambda_grid)
        except SmoothingError as exc:
            errors.append(str(exc))
            continue
        if best is None or rep.gcv < best[1].gcv:
            best = (cs, rep)
    if best is None:
        raise SmoothingError("; ".join(errors) or "no candidate basis sizes")
    return best


def mean_curve(cs: CurveSet) -> np.ndarray:
    """Coefficients of the pointwise mean curve."""
    return cs.coef.mean(axis=0)


def center(cs: CurveSet) -> tuple[CurveSet, np.ndarray]:
    """Subtract the mean curve; returns the centered set and the mean."""
    if cs.n_curves < 2:
        raise InputError("centering needs at least two curves")
    mu = mean_curve(cs)
    return CurveSet(cs.basis, cs.coef - mu), mu


def eval_curves(cs: CurveSet, grid: Sequence[float]) -> np.ndarray:
    """Values of every curve on ``grid``; shape ``(N, len(grid))``."""
    return cs.coef @ eval_basis(cs.basis, grid, 0).T
