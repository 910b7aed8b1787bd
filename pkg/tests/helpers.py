"""Fixtures and independent oracles shared by the unit and acceptance tests."""

import numpy as np

from fplsr.basis import eval_basis, gram_matrix, make_bspline, penalty_matrix
from fplsr.fdata import DEFAULT_LAMBDA_GRID, CurveSet, smooth_curves


def noisy_sine(seed=7, n=50, J=100, sd=0.2):
    x = np.linspace(0, 1, J + 2)[1:-1]
    truth = np.sin(2 * np.pi * x)
    y = truth + np.random.default_rng(seed).normal(0, sd, (n, J))
    return x, y, truth


def normal_equation_fit(y, x, bs, lam):
    """Penalized LS by a direct solve of the normal equations."""
    E = eval_basis(bs, x)
    A = E.T @ E + lam * penalty_matrix(bs, 2)
    return np.linalg.solve(A, E.T @ y.T).T


def gcv_vs_truth(seed=7):
    """(mse at the GCV choice, best mse over the grid when scored against the truth)."""
    x, y, truth = noisy_sine(seed)
    bs = make_bspline((0, 1), 20)
    E = eval_basis(bs, x)
    cs, rep = smooth_curves(y, x, bs)
    mse_gcv = np.mean((cs.coef @ E.T - truth) ** 2)
    oracle = [np.mean((normal_equation_fit(y, x, bs, lam) @ E.T - truth) ** 2) for lam in DEFAULT_LAMBDA_GRID]
    return mse_gcv, min(oracle), rep


def exact_recovery_error(seed=3, K=12, J=60, N=8):
    bs = make_bspline((-1, 2), K)
    x = np.sort(np.random.default_rng(seed).uniform(-1, 2, J))
    c = np.random.default_rng(seed + 1).standard_normal((N, K))
    cs, _ = smooth_curves(c @ eval_basis(bs, x).T, x, bs, [0.0])
    return np.max(np.abs(cs.coef - c))


def random_curves(rng, bs, n, scale=1.0):
    return CurveSet(bs, scale * rng.standard_normal((n, bs.n_basis)))


def planted_rank1(seed=11, N=40, Ks=8, Kt=7):
    """Noiseless rank-one problem with a whitened predictor design.

    Predictor coefficients are chosen so the half-metric design has
    orthogonal, equal-norm columns; then one PLS component reproduces the
    planted coefficient matrix exactly.
    """
    r = np.random.default_rng(seed)
    bs_s, bs_t = make_bspline((0, 1), Ks), make_bspline((-1, 1), Kt)
    Gs = gram_matrix(bs_s).values
    mu, V = np.linalg.eigh(Gs)
    g_inv_half = (V / np.sqrt(mu)) @ V.T
    Q, _ = np.linalg.qr(r.standard_normal((N, Ks)))
    Q = Q - Q.mean(axis=0)
    Q, _ = np.linalg.qr(Q)  # centered, orthonormal columns
    D = Q @ g_inv_half + r.standard_normal(Ks)  # shared shift is removed by centering
    b1, b2 = r.standard_normal(Ks), r.standard_normal(Kt)
    B0 = np.outer(b1, b2)
    C = (D @ Gs) @ B0 + r.standard_normal(Kt)
    return CurveSet(bs_s, D), CurveSet(bs_t, C), B0
