"""Multivariate partial least squares: NIPALS (PLS2) and SIMPLS.

Both fitters center ``X`` and ``Y`` internally and return an immutable
:class:`PlsModel`. Each weight vector is sign-normalized so its
largest-magnitude entry is positive, which makes fits reproducible
bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError

__all__ = ["PlsModel", "nipals_fit", "simpls_fit", "pls_predict", "pls_coefficients"]

NIPALS_TOL = 1e-10
NIPALS_MAX_ITER = 500
POWER_TOL = 1e-12
POWER_MAX_ITER = 1000
# residual norms below this fraction of the original count as exhausted
EXHAUSTED = 1e-12


@dataclass(frozen=True, eq=False)
class PlsModel:
    """Fitted PLS regression.

    Attributes
    ----------
    h : int
        Number of extracted components (may be below the requested count
        when ``truncated`` is set).
    x_mean, y_mean : ndarray
        Column means removed before fitting.
    W : ndarray of shape (p, h)
        Unit-norm weight vectors.
    T : ndarray of shape (N, h)
        Scores, mutually orthogonal.
    P : ndarray of shape (p, h)
        X loadings.
    Q : ndarray of shape (q, h)
        Y loadings.
    R : ndarray of shape (p, h)
        Rotations mapping centered X straight to scores, ``T = Xc @ R``.
    B : ndarray of shape (p, q)
        Regression coefficients on centered X.
    fitted : ndarray of shape (N, q)
        In-sample predictions.
    """

    h: int
    x_mean: np.ndarray
    y_mean: np.ndarray
    W: np.ndarray
    T: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    B: np.ndarray
    fitted: np.ndarray
    algorithm: str
    truncated: bool = False

    def to_dict(self) -> dict:
        def mat(a):
            a = np.atleast_2d(a)
            return {"rows": a.shape[0], "cols": a.shape[1], "data": a.ravel().tolist()}

        return {
            "algorithm": self.algorithm,
            "h": self.h,
            "truncated": self.truncated,
            "x_mean": self.x_mean.tolist(),
            "y_mean": self.y_mean.tolist(),
            **{k: mat(getattr(self, k)) for k in ("W", "T", "P", "Q", "R", "B", "fitted")},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PlsModel":
        def mat(m):
            return np.asarray(m["data"], dtype=float).reshape(m["rows"], m["cols"])

        try:
            return cls(
                h=int(d["h"]),
                x_mean=np.asarray(d["x_mean"], dtype=float),
                y_mean=np.asarray(d["y_mean"], dtype=float),
                algorithm=d["algorithm"],
                truncated=bool(d["truncated"]),
                **{k: mat(d[k]) for k in ("W", "T", "P", "Q", "R", "B", "fitted")},
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise InputError(f"invalid PLS model description: {exc}") from exc


def _prepare(X, Y, h):
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.ndim != 2 or Y.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise InputError("X and Y must be 2-D with the same number of rows")
    n, p = X.shape
    if n < 2:
        raise InputError("PLS needs at least two observations")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise InputError("X and Y must be finite")
    if not 1 <= h <= min(n - 1, p):
        raise InputError(f"h={h} outside [1, min(N-1, p)={min(n - 1, p)}]")
    x_mean = X.mean(axis=0)
    y_mean = Y.mean(axis=0)
    return X, Y, x_mean, y_mean


def _sign_flip(w: np.ndarray) -> float:
    return -1.0 if w[np.argmax(np.abs(w))] < 0 else 1.0


def _finish(algorithm, X, x_mean, y_mean, W, T, P, Q, R, q, truncated):
    p = X.shape[1]
    h = len(W)
    W = np.column_stack(W) if h else np.zeros((p, 0))
    T = np.column_stack(T) if h else np.zeros((X.shape[0], 0))
    P = np.column_stack(P) if h else np.zeros((p, 0))
    Q = np.column_stack(Q) if h else np.zeros((q, 0))
    if R is None:
        R = W @ np.linalg.inv(P.T @ W) if h else np.zeros((p, 0))
    else:
        R = np.column_stack(R) if h else np.zeros((p, 0))
    B = R @ Q.T
    fitted = (X - x_mean) @ B + y_mean
    return PlsModel(h, x_mean, y_mean, W, T, P, Q, R, B, fitted, algorithm, truncated)


def nipals_fit(X, Y, h: int) -> PlsModel:
    """Fit PLS2 by the NIPALS algorithm.

    For each component the inner loop alternates between X and Y weights
    until the score vector stabilizes (relative change below ``1e-10`` or
    500 sweeps), then both blocks are deflated by the score.

    Parameters
    ----------
    X : array_like of shape (N, p)
    Y : array_like of shape (N, q) or (N,)
    h : int
        Number of components, ``1 <= h <= min(N - 1, p)``.

    Returns
    -------
    PlsModel
        ``truncated`` is True when no covariance was left before ``h``
        components were extracted.
    """
    X, Y, x_mean, y_mean = _prepare(X, Y, h)
    Xr = X - x_mean
    Yr = Y - y_mean
    x0 = np.linalg.norm(Xr)
    y0 = np.linalg.norm(Yr)
    W, T, P, Q = [], [], [], []
    truncated = False
    for _ in range(h):
        if np.linalg.norm(Yr) <= EXHAUSTED * y0 or np.linalg.norm(Xr) <= EXHAUSTED * x0:
            truncated = True
            break
        u = Yr[:, np.argmax((Yr * Yr).sum(axis=0))].copy()
        if np.linalg.norm(Xr.T @ u) <= EXHAUSTED * x0 * np.linalg.norm(u):
            truncated = True
            break
        t_old = None
        for _ in range(NIPALS_MAX_ITER):
            w = Xr.T @ u
            w /= np.linalg.norm(w)
            t = Xr @ w
            c = Yr.T @ t / (t @ t)
            cc = c @ c
            if cc == 0:
                break
            u = Yr @ c / cc
            if t_old is not None and np.linalg.norm(t - t_old) < NIPALS_TOL * np.linalg.norm(t):
                break
            t_old = t
        if cc == 0:
            # Y residual orthogonal to the X residual space
            truncated = True
            break
        s = _sign_flip(w)
        w, t, c = s * w, s * t, s * c
        tt = t @ t
        p_load = Xr.T @ t / tt
        c = Yr.T @ t / tt
        Xr = Xr - np.outer(t, p_load)
        Yr = Yr - np.outer(t, c)
        W.append(w)
        T.append(t)
        P.append(p_load)
        Q.append(c)
    return _finish("nipals", X, x_mean, y_mean, W, T, P, Q, None, Y.shape[1], truncated)


def _dominant_left_vector(S: np.ndarray) -> np.ndarray:
    # power iteration on S S^T, started from the largest column of S
    r = S[:, np.argmax((S * S).sum(axis=0))].copy()
    r /= np.linalg.norm(r)
    for _ in range(POWER_MAX_ITER):
        r_new = S @ (S.T @ r)
        r_new /= np.linalg.norm(r_new)
        if np.linalg.norm(r_new - r) < POWER_TOL:
            return r_new
        r = r_new
    # slow spectral gap: settle it exactly
    _, V = np.linalg.eigh(S @ S.T)
    return V[:, -1]


def simpls_fit(X, Y, h: int) -> PlsModel:
    """Fit PLS by de Jong's SIMPLS, deflating the cross-covariance ``X^T Y``.

    Scores are normalized to unit length; ``R`` holds the correspondingly
    rescaled weight vectors so that ``B = R @ Q.T``.
    """
    X, Y, x_mean, y_mean = _prepare(X, Y, h)
    Xc = X - x_mean
    Yc = Y - y_mean
    S = Xc.T @ Yc
    s0 = np.linalg.norm(S)
    W, T, P, Q, R, V = [], [], [], [], [], []
    truncated = False
    for _ in range(h):
        if s0 == 0 or np.linalg.norm(S) <= EXHAUSTED * s0:
            truncated = True
            break
        r = _dominant_left_vector(S)
        r *= _sign_flip(r)
        t = Xc @ r
        nt = np.linalg.norm(t)
        if nt == 0:
            truncated = True
            break
        w = r.copy()
        t /= nt
        r = r / nt
        p_load = Xc.T @ t
        q_load = Yc.T @ t
        v = p_load.copy()
        for _ in range(2):
            for vi in V:
                v -= vi * (vi @ v)
        v /= np.linalg.norm(v)
        S = S - np.outer(v, v @ S)
        V.append(v)
        W.append(w)
        T.append(t)
        P.append(p_load)
        Q.append(q_load)
        R.append(r)
    return _finish("simpls", X, x_mean, y_mean, W, T, P, Q, R, Y.shape[1], truncated)


def pls_predict(model: PlsModel, Xnew) -> np.ndarray:
    """Predict responses for new rows: ``(Xnew - x_mean) @ B + y_mean``."""
    Xnew = np.asarray(Xnew, dtype=float)
    if Xnew.ndim == 1:
        Xnew = Xnew[None, :]
    if Xnew.ndim != 2 or Xnew.shape[1] != model.B.shape[0]:
        raise InputError(
            f"Xnew has {Xnew.shape[-1]} columns, model expects {model.B.shape[0]}"
        )
    return (Xnew - model.x_mean) @ model.B + model.y_mean


def pls_coefficients(model: PlsModel) -> np.ndarray:
    return model.B
