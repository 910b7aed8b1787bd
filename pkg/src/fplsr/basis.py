"""B-spline basis systems, Gram and roughness matrices, and PSD square roots.

A :class:`BasisSystem` is a clamped B-spline basis on a closed interval.
Evaluation uses the Cox--de Boor recursion over the full knot vector, so
basis values outside a function's support are exact zeros; this keeps Gram
matrices exactly banded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, InputError, NotPSDError

__all__ = [
    "BasisSystem",
    "GramMatrix",
    "SqrtPair",
    "make_bspline",
    "eval_basis",
    "gram_matrix",
    "penalty_matrix",
    "psd_sqrt",
]


@dataclass(frozen=True)
class BasisSystem:
    """Clamped B-spline basis.

    Parameters
    ----------
    order : int
        Spline order (degree + 1). 4 gives cubic splines.
    domain : tuple of float
        Closed interval ``(a, b)`` with ``a < b``.
    interior_knots : tuple of float
        Sorted knots strictly inside ``(a, b)``.
    """

    order: int
    domain: tuple[float, float]
    interior_knots: tuple[float, ...]

    def __post_init__(self):
        a, b = self.domain
        if self.order < 1:
            raise InputError(f"order must be >= 1, got {self.order}")
        if not a < b:
            raise InputError(f"degenerate domain {self.domain}")
        knots = np.asarray(self.interior_knots, dtype=float)
        if knots.size and (np.any(knots <= a) or np.any(knots >= b)):
            raise InputError("interior knots must lie strictly inside the domain")
        if np.any(np.diff(knots) < 0):
            raise InputError("interior knots must be sorted")

    @property
    def n_basis(self) -> int:
        return len(self.interior_knots) + self.order

    @property
    def knots(self) -> np.ndarray:
        """Full clamped knot vector of length ``n_basis + order``."""
        a, b = self.domain
        return np.concatenate(
            [np.full(self.order, a), np.asarray(self.interior_knots, float), np.full(self.order, b)]
        )

    @property
    def breakpoints(self) -> np.ndarray:
        """Distinct knot values, ``a`` and ``b`` included."""
        return np.unique(self.knots)

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "domain": [float(self.domain[0]), float(self.domain[1])],
            "n_basis": self.n_basis,
            "interior_knots": [float(k) for k in self.interior_knots],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BasisSystem":
        try:
            bs = cls(
                order=int(d["order"]),
                domain=(float(d["domain"][0]), float(d["domain"][1])),
                interior_knots=tuple(float(k) for k in d["interior_knots"]),
            )
        except (KeyError, TypeError, IndexError) as exc:
            raise InputError(f"invalid basis description: {exc}") from exc
        if "n_basis" in d and int(d["n_basis"]) != bs.n_basis:
            raise InputError("n_basis inconsistent with interior knots and order")
        return bs


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """Matrix of L2 inner products of the functions of ``basis``."""

    values: np.ndarray
    basis: BasisSystem


@dataclass(frozen=True, eq=False)
class SqrtPair:
    """Symmetric square root of a PSD matrix and its inverse."""

    sqrt: np.ndarray
    inv_sqrt: np.ndarray
    cond: float


def make_bspline(
    domain: Sequence[float],
    n_basis: int,
    order: int = 4,
    argvals: Sequence[float] | None = None,
) -> BasisSystem:
    """Build a clamped B-spline basis with ``n_basis`` functions.

    Interior knots sit at ``n_basis - order`` equally spaced positions of the
    domain, or at equally spaced quantiles of ``argvals`` when given.

    Examples
    --------
    >>> make_bspline((-1, 1), 10).interior_knots[0]  # doctest: +ELLIPSIS
    -0.714285...
    """
    a, b = float(domain[0]), float(domain[1])
    if not a < b:
        raise InputError(f"degenerate domain ({a}, {b})")
    if order < 1:
        raise InputError(f"order must be >= 1, got {order}")
    if n_basis < order:
        raise InputError(f"n_basis ({n_basis}) must be >= order ({order})")
    n_int = n_basis - order
    probs = np.arange(1, n_int + 1) / (n_int + 1)
    if argvals is None:
        interior = a + (b - a) * probs
    else:
        interior = np.quantile(np.asarray(argvals, float), probs)
        if np.any(np.diff(interior) <= 0) or (n_int and (interior[0] <= a or interior[-1] >= b)):
            raise InputError("argvals too concentrated to place distinct quantile knots")
    return BasisSystem(order=order, domain=(a, b), interior_knots=tuple(float(k) for k in interior))


def _cox_de_boor(t: np.ndarray, x: np.ndarray, order: int) -> np.ndarray:
    # all len(t) - order functions of the given order on knot vector t
    n_int = len(t) - 1
    span = np.searchsorted(t, x, side="right") - 1
    # right endpoint belongs to the last non-degenerate span (left limit)
    last = np.nonzero(t[1:] > t[:-1])[0][-1]
    span = np.minimum(span, last)
    vals = np.zeros((x.size, n_int))
    vals[np.arange(x.size), span] = 1.0
    xc = x[:, None]
    for k in range(2, order + 1):
        j = np.arange(len(t) - k)
        den_l = t[j + k - 1] - t[j]
        den_r = t[j + k] - t[j + 1]
        safe_l = np.where(den_l > 0, den_l, 1.0)
        safe_r = np.where(den_r > 0, den_r, 1.0)
        left = np.where(den_l > 0, (xc - t[j]) / safe_l, 0.0) * vals[:, j]
        right = np.where(den_r > 0, (t[j + k] - xc) / safe_r, 0.0) * vals[:, j + 1]
        vals = left + right
    return vals


def _basis_derivs(t: np.ndarray, x: np.ndarray, order: int, deriv: int) -> np.ndarray:
    if deriv == 0:
        return _cox_de_boor(t, x, order)
    lower = _basis_derivs(t, x, order - 1, deriv - 1)
    j = np.arange(len(t) - order)
    den_l = t[j + order - 1] - t[j]
    den_r = t[j + order] - t[j + 1]
    c_l = np.where(den_l > 0, (order - 1) / np.where(den_l > 0, den_l, 1.0), 0.0)
    c_r = np.where(den_r > 0, (order - 1) / np.where(den_r > 0, den_r, 1.0), 0.0)
    return lower[:, j] * c_l - lower[:, j + 1] * c_r


def eval_basis(bs: BasisSystem, points: Sequence[float], deriv_order: int = 0) -> np.ndarray:
    """Evaluate every basis function (or a derivative) at ``points``.

    Returns an array of shape ``(len(points), bs.n_basis)``. Values are
    right-continuous except at the right endpoint, where the left limit is
    used.

    Raises
    ------
    DomainError
        If any point lies outside the basis domain.
    """
    x = np.atleast_1d(np.asarray(points, dtype=float))
    if x.ndim != 1:
        raise InputError("points must be one-dimensional")
    if deriv_order < 0:
        raise InputError("deriv_order must be nonnegative")
    a, b = bs.domain
    if x.size and (not np.all(np.isfinite(x)) or x.min() < a or x.max() > b):
        raise DomainError(f"evaluation points outside domain [{a}, {b}]")
    if deriv_order >= bs.order:
        return np.zeros((x.size, bs.n_basis))
    return _basis_derivs(bs.knots, x, bs.order, deriv_order)


def _span_quadrature(bs: BasisSystem, n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    brk = bs.breakpoints
    lo, hi = brk[:-1, None], brk[1:, None]
    half = (hi - lo) / 2.0
    x = (lo + hi) / 2.0 + half * nodes
    w = half * weights
    return x.ravel(), w.ravel()


def _weighted_cross(bs: BasisSystem, deriv_order: int) -> np.ndarray:
    # Gauss-Legendre with n nodes is exact to degree 2n - 1
    degree = 2 * (bs.order - 1 - deriv_order)
    n_nodes = max(1, math.ceil((degree + 1) / 2))
    x, w = _span_quadrature(bs, n_nodes)
    E = eval_basis(bs, x, deriv_order)
    G = E.T @ (w[:, None] * E)
    return (G + G.T) / 2.0


def gram_matrix(bs: BasisSystem) -> GramMatrix:
    """Inner-product matrix of the basis, exact up to rounding."""
    return GramMatrix(values=_weighted_cross(bs, 0), basis=bs)


def penalty_matrix(bs: BasisSystem, deriv_order: int = 2) -> np.ndarray:
    """Roughness penalty ``R[j, k] = integral of D^d phi_j * D^d phi_k``."""
    if deriv_order < 0:
        raise InputError("deriv_order must be nonnegative")
    if deriv_order >= bs.order:
        raise InputError(
            f"derivative order {deriv_order} annihilates splines of order {bs.order}"
        )
    return _weighted_cross(bs, deriv_order)


def psd_sqrt(M: np.ndarray) -> SqrtPair:
    """Symmetric square root and inverse square root of a PSD matrix.

    Eigenvalues below ``1e-12 * lambda_max`` are raised to that floor before
    rooting, so the inverse is always defined.

    Parameters
    ----------
    M : ndarray of shape (K, K)
        Symmetric positive semidefinite matrix.

    Returns
    -------
    SqrtPair
        ``sqrt @ sqrt ~= M`` and ``sqrt @ inv_sqrt ~= I``; ``cond`` is the
        condition number after flooring.

    Raises
    ------
    NotPSDError
        If ``M`` is asymmetric, zero, or has a materially negative eigenvalue.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InputError("psd_sqrt expects a square matrix")
    scale = np.linalg.norm(M)
    if not np.all(np.isfinite(M)):
        raise NotPSDError("matrix has non-finite entries")
    if np.abs(M - M.T).max(initial=0.0) > 1e-10 * max(scale, 1.0):
        raise NotPSDError("matrix is not symmetric")
    lam, V = np.linalg.eigh((M + M.T) / 2.0)
    if lam.size == 0 or lam[-1] <= 0:
        raise NotPSDError("matrix has no positive eigenvalue")
    if lam[0] < -1e-12 * scale:
        raise NotPSDError(f"negative eigenvalue {lam[0]:.3e}")
    floor = 1e-12 * lam[-1]
    lam = np.maximum(lam, floor)
    root = np.sqrt(lam)
    sqrt = (V * root) @ V.T
    inv_sqrt = (V / root) @ V.T
    return SqrtPair(
        sqrt=(sqrt + sqrt.T) / 2.0,
        inv_sqrt=(inv_sqrt + inv_sqrt.T) / 2.0,
        cond=float(lam[-1] / lam[0]),
    )
