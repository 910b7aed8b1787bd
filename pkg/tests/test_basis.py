import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.interpolate import BSpline

from fplsr.basis import BasisSystem, eval_basis, gram_matrix, make_bspline, penalty_matrix, psd_sqrt
from fplsr.errors import DomainError, InputError, NotPSDError


def trapezoid_cross(bs, n_points, deriv=0):
    a, b = bs.domain
    x = np.linspace(a, b, n_points)
    E = eval_basis(bs, x, deriv)
    w = np.full(n_points, (b - a) / (n_points - 1))
    w[[0, -1]] /= 2
    return E.T @ (w[:, None] * E)


def greville(bs):
    t = bs.knots
    p = bs.order
    return np.array([t[j + 1 : j + p].mean() for j in range(bs.n_basis)])


# -- make_bspline ---------------------------------------------------------


def test_order_one_gives_indicators():
    bs = make_bspline((0, 1), 2, order=1)
    assert bs.interior_knots == (0.5,)
    E = eval_basis(bs, [0.0, 0.25, 0.49, 0.5, 0.75, 1.0])
    np.testing.assert_array_equal(E, [[1, 0], [1, 0], [1, 0], [0, 1], [0, 1], [0, 1]])


def test_cubic_ten_functions_knots():
    bs = make_bspline((-1, 1), 10)
    assert bs.n_basis == 10
    np.testing.assert_allclose(bs.interior_knots, np.arange(-5, 6, 2) / 7, atol=1e-15)
    assert np.all(bs.knots[:4] == -1) and np.all(bs.knots[-4:] == 1)


@pytest.mark.parametrize("domain,k", [((-1, 1), 3), ((1, 1), 5), ((2, 0), 6)])
def test_make_bspline_rejects(domain, k):
    with pytest.raises(InputError):
        make_bspline(domain, k)


def test_quantile_knots():
    x = np.linspace(0, 1, 101) ** 2
    bs = make_bspline((0, 1), 6, argvals=x)
    np.testing.assert_allclose(bs.interior_knots, np.quantile(x, [1 / 3, 2 / 3]))


def test_basis_json_roundtrip():
    bs = make_bspline((0.5, 3.0), 9, order=3)
    again = BasisSystem.from_dict(json.loads(json.dumps(bs.to_dict())))
    assert again == bs
    assert bs.to_dict()["n_basis"] == 9


def test_invalid_knots_rejected():
    with pytest.raises(InputError):
        BasisSystem(order=4, domain=(0.0, 1.0), interior_knots=(0.5, 1.5))


# -- eval_basis -----------------------------------------------------------


def test_partition_of_unity_and_endpoints():
    bs = make_bspline((-1, 1), 10)
    x = np.linspace(-1, 1, 1001)
    E = eval_basis(bs, x)
    assert np.max(np.abs(E.sum(axis=1) - 1)) <= 1e-12
    assert E.min() >= 0 and E.max() <= 1
    np.testing.assert_array_equal(E[0], np.eye(10)[0])
    np.testing.assert_array_equal(E[-1], np.eye(10)[-1])
    assert np.max(np.abs(eval_basis(bs, x, 1).sum(axis=1))) <= 1e-10


@pytest.mark.parametrize("deriv", [0, 1, 2, 3])
def test_matches_scipy(deriv):
    bs = make_bspline((-1, 2), 13)
    x = np.linspace(-1, 2, 777)[:-1]  # scipy extrapolates differently at b
    ref = np.column_stack([
        BSpline(bs.knots, np.eye(bs.n_basis)[k], bs.order - 1)(x, nu=deriv) for k in range(bs.n_basis)
    ])
    np.testing.assert_allclose(eval_basis(bs, x, deriv), ref, atol=1e-11, rtol=1e-12)


def test_local_support():
    bs = make_bspline((0, 1), 12)
    x = np.linspace(0, 1, 2001)
    E = eval_basis(bs, x)
    t = bs.knots
    for k in range(bs.n_basis):
        outside = (x < t[k]) | (x > t[k + bs.order])
        assert np.all(E[outside, k] == 0)


def test_out_of_domain():
    bs = make_bspline((0, 1), 5)
    with pytest.raises(DomainError):
        eval_basis(bs, [0.5, 1.0000001])
    with pytest.raises(DomainError):
        eval_basis(bs, [-1e-9])


def test_high_derivative_is_zero():
    bs = make_bspline((0, 1), 5, order=2)
    assert not eval_basis(bs, [0.1, 0.7], 2).any()


@given(
    st.integers(1, 6),
    st.integers(0, 12),
    st.floats(-50, 50),
    st.floats(0.01, 100),
    st.lists(st.floats(0, 1), min_size=1, max_size=20),
)
def test_partition_of_unity_property(order, extra, a, width, u):
    bs = make_bspline((a, a + width), order + extra, order=order)
    x = np.clip(a + width * np.asarray(u), a, a + width)
    E = eval_basis(bs, x)
    assert np.all(E >= 0)
    assert np.max(np.abs(E.sum(axis=1) - 1)) <= 1e-12


# -- gram and penalty -----------------------------------------------------


def test_gram_order_one():
    bs = make_bspline((0, 1), 2, order=1)
    np.testing.assert_allclose(gram_matrix(bs).values, np.diag([0.5, 0.5]), atol=1e-15)


@given(st.integers(1, 5), st.integers(0, 15), st.floats(-10, 10), st.floats(0.1, 20))
def test_gram_invariants(order, extra, a, width):
    bs = make_bspline((a, a + width), order + extra, order=order)
    G = gram_matrix(bs).values
    assert abs(G.sum() - width) <= 1e-10 * max(1.0, width)
    np.testing.assert_array_equal(G, G.T)
    j, k = np.indices(G.shape)
    assert np.all(G[np.abs(j - k) >= order] == 0)
    np.linalg.cholesky(G)


def test_gram_trapezoid_bias_explained():
    # The plain trapezoid rule has an h^2/12 [f'(b) - f'(a)] bias at this
    # resolution; after removing it the agreement is at rounding level.
    bs = make_bspline((-1, 1), 10)
    n = 20000
    h = 2.0 / (n - 1)
    G = gram_matrix(bs).values
    T = trapezoid_cross(bs, n)
    E0 = eval_basis(bs, [-1.0, 1.0])
    E1 = eval_basis(bs, [-1.0, 1.0], 1)
    # derivative of phi_j phi_k at both ends
    dprod = [np.outer(E1[i], E0[i]) + np.outer(E0[i], E1[i]) for i in range(2)]
    corrected = T - h**2 / 12 * (dprod[1] - dprod[0])
    assert np.max(np.abs(corrected - G)) < 1e-11


def test_gram_richardson_trapezoid():
    bs = make_bspline((-1, 1), 10)
    n1, n2 = 20000, 10000
    h1, h2 = 2 / (n1 - 1), 2 / (n2 - 1)
    T1, T2 = trapezoid_cross(bs, n1), trapezoid_cross(bs, n2)
    rich = (h2**2 * T1 - h1**2 * T2) / (h2**2 - h1**2)
    assert np.max(np.abs(rich - gram_matrix(bs).values)) <= 1e-8


def test_penalty_rejects_high_order():
    with pytest.raises(InputError):
        penalty_matrix(make_bspline((0, 1), 4, order=2), 2)


@pytest.mark.parametrize("order,k", [(3, 7), (4, 10), (5, 14)])
def test_penalty_nullspace(order, k):
    bs = make_bspline((-2, 3), k, order=order)
    R = penalty_matrix(bs, 2)
    ones, lin = np.ones(k), greville(bs)
    for c in (ones, lin, 3 * ones - 2 * lin):
        assert c @ R @ c < 1e-10
    x = np.linspace(-2, 3, 50)
    np.testing.assert_allclose(eval_basis(bs, x) @ lin, x, atol=1e-12)


def test_penalty_matches_trapezoid():
    bs = make_bspline((-1, 1), 10)
    R = penalty_matrix(bs, 2)
    T = trapezoid_cross(bs, 20000, deriv=2)
    assert np.max(np.abs(R - T)) / np.max(np.abs(R)) <= 1e-6


def test_penalty_psd():
    R = penalty_matrix(make_bspline((0, 1), 15), 2)
    assert np.linalg.eigvalsh(R).min() > -1e-10 * np.abs(R).max()


# -- psd_sqrt -------------------------------------------------------------


def test_sqrt_identity_and_diag():
    p = psd_sqrt(np.eye(4))
    np.testing.assert_allclose(p.sqrt, np.eye(4), atol=1e-15)
    np.testing.assert_allclose(p.inv_sqrt, np.eye(4), atol=1e-15)
    p = psd_sqrt(np.diag([4.0, 9.0]))
    np.testing.assert_allclose(p.sqrt, np.diag([2.0, 3.0]), atol=1e-14)
    np.testing.assert_allclose(p.inv_sqrt, np.diag([0.5, 1 / 3]), atol=1e-14)
    assert p.cond == pytest.approx(9 / 4)


def test_sqrt_random_spd(rng):
    A = rng.standard_normal((12, 12))
    M = A @ A.T + 0.1 * np.eye(12)
    p = psd_sqrt(M)
    assert np.linalg.norm(p.sqrt @ p.sqrt - M) / np.linalg.norm(M) < 1e-10
    assert np.linalg.norm(p.sqrt @ p.inv_sqrt - np.eye(12)) < 1e-8
    np.testing.assert_allclose(p.sqrt, p.sqrt.T, atol=0)


def test_sqrt_errors():
    with pytest.raises(NotPSDError):
        psd_sqrt(np.diag([1.0, -0.5]))
    with pytest.raises(NotPSDError):
        psd_sqrt(np.array([[1.0, 0.2], [0.0, 1.0]]))
    with pytest.raises(NotPSDError):
        psd_sqrt(np.zeros((3, 3)))


def test_sqrt_singular_is_floored():
    p = psd_sqrt(np.diag([1.0, 0.0]))
    assert np.isfinite(p.inv_sqrt).all()
    assert p.cond == pytest.approx(1e12)


@given(st.integers(1, 8), st.integers(0, 2**32 - 1), st.floats(-6, 0))
def test_sqrt_property(k, seed, log_min):
    r = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(r.standard_normal((k, k)))
    lam = np.logspace(log_min, 0, k)
    M = (Q * lam) @ Q.T
    M = (M + M.T) / 2
    p = psd_sqrt(M)
    assert np.linalg.norm(p.sqrt @ p.sqrt - M) / np.linalg.norm(M) < 1e-10
    assert np.linalg.norm(p.sqrt @ p.inv_sqrt - np.eye(k)) < 1e-8


def test_gram_sqrt_of_real_basis():
    G = gram_matrix(make_bspline((-1, 1), 40)).values
    p = psd_sqrt(G)
    assert np.linalg.norm(p.sqrt @ p.sqrt - G) / np.linalg.norm(G) < 1e-10
    assert np.linalg.norm(p.sqrt @ p.inv_sqrt - np.eye(40)) < 1e-8
