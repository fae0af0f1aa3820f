import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import gammaln, multigammaln

from mtnet.linalg import (
    NotPositiveDefinite,
    kron,
    ln_mv_gamma,
    spd_factor,
    spd_factor_jitter,
    spd_solve,
    unvec,
    vec,
)

from conftest import random_spd


@pytest.mark.parametrize(
    "p, z, expected",
    [
        (1, 4.0, math.log(6.0)),
        (2, 3.0, math.log(1.5 * math.pi)),
        (2, 1.5, math.log(math.pi / 2)),
    ],
)
def test_ln_mv_gamma_values(p, z, expected):
    assert ln_mv_gamma(p, z) == pytest.approx(expected, abs=1e-12)
    assert round(ln_mv_gamma(p, z), 6) == round(expected, 6)


def test_ln_mv_gamma_p1_is_lgamma_on_grid():
    z = np.arange(0.5, 10.01, 0.5)
    np.testing.assert_allclose(ln_mv_gamma(1, z), gammaln(z), rtol=0, atol=1e-12)


@pytest.mark.parametrize("p", [2, 3, 5, 8])
def test_ln_mv_gamma_matches_scipy(p):
    z = np.linspace((p - 1) / 2 + 0.01, 30, 97)
    np.testing.assert_allclose(ln_mv_gamma(p, z), [multigammaln(v, p) for v in z], rtol=1e-13)


@pytest.mark.parametrize("p", [1, 2, 4, 7])
def test_ln_mv_gamma_increasing(p):
    # every term lgamma(z - (i-1)/2) is increasing once its argument passes 1.4616
    z = np.linspace((p - 1) / 2 + 1.5, 20, 200)
    assert np.all(np.diff(ln_mv_gamma(p, z)) > 0)


def test_ln_mv_gamma_dips_near_lower_end():
    # lgamma has its minimum at 1.4616..., so monotonicity fails just above (p-1)/2 + 0.5
    assert ln_mv_gamma(1, 1.0) < ln_mv_gamma(1, 0.6)


@pytest.mark.parametrize("p, z", [(1, 0.0), (2, 0.5), (3, 1.0), (3, -2.0)])
def test_ln_mv_gamma_domain(p, z):
    with pytest.raises(ValueError):
        ln_mv_gamma(p, z)


def test_vec_examples():
    np.testing.assert_array_equal(vec([[1, 2], [3, 4]]), [1, 3, 2, 4])
    np.testing.assert_array_equal(vec(np.eye(2)), [1, 0, 0, 1])
    M = np.arange(9.0).reshape(3, 3)
    np.testing.assert_array_equal(unvec(vec(M), 3), M)


def test_vec_position_convention():
    n = 4
    M = np.zeros((n, n))
    M[2, 1] = 7.0
    # 1-based (i, j) = (3, 2) lands at (j-1) n + i = 7, i.e. 0-based index 6
    assert vec(M)[6] == 7.0


@given(st.integers(0, 2**31))
def test_vec_kron_identity(seed):
    r = np.random.default_rng(seed)
    A, X, B = (r.standard_normal((3, 3)) for _ in range(3))
    np.testing.assert_allclose(vec(A @ X @ B), kron(B.T, A) @ vec(X), atol=1e-12)


def test_kron_examples(rng):
    np.testing.assert_array_equal(kron(np.eye(2), np.eye(2)), np.eye(4))
    M = rng.standard_normal((3, 3))
    np.testing.assert_array_equal(kron([[2.5]], M), 2.5 * M)


@given(st.integers(0, 2**31))
def test_kron_mixed_product(seed):
    r = np.random.default_rng(seed)
    A, B, C, D = (r.standard_normal((2, 2)) for _ in range(4))
    np.testing.assert_allclose(kron(A, B) @ kron(C, D), kron(A @ C, B @ D), atol=1e-12)


def test_spd_factor_examples():
    F = spd_factor(np.eye(3))
    np.testing.assert_array_equal(F.L, np.eye(3))
    assert F.logdet == 0.0
    F = spd_factor(np.diag([4.0, 9.0]))
    np.testing.assert_allclose(F.L, np.diag([2.0, 3.0]))
    assert F.logdet == pytest.approx(math.log(36.0), abs=1e-14)


def test_spd_factor_indefinite():
    with pytest.raises(NotPositiveDefinite):
        spd_factor(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_spd_factor_rejects_asymmetric():
    with pytest.raises(ValueError):
        spd_factor(np.array([[1.0, 0.5], [0.0, 1.0]]))


@given(st.integers(0, 2**31), st.integers(1, 8))
def test_spd_factor_reconstructs(seed, n):
    M = random_spd(np.random.default_rng(seed), n, cond=1e4)
    F = spd_factor(M)
    assert np.linalg.norm(F.L @ F.L.T - M) / np.linalg.norm(M) < 1e-8
    assert F.logdet == pytest.approx(2 * np.log(np.diag(F.L)).sum(), abs=1e-12)
    assert F.logdet == pytest.approx(np.linalg.slogdet(M)[1], abs=1e-9)


def test_spd_solve_examples(rng):
    B = rng.standard_normal((3, 2))
    np.testing.assert_allclose(spd_solve(spd_factor(np.eye(3)), B), B)
    np.testing.assert_allclose(spd_solve(spd_factor(np.diag([2.0, 3.0])), np.eye(2)), np.diag([0.5, 1 / 3]))


def test_spd_solve_matches_explicit_inverse(rng):
    M = random_spd(rng, 4)
    R = rng.standard_normal((4, 3))
    X = spd_solve(spd_factor(M), R)
    np.testing.assert_allclose(X, np.linalg.inv(M) @ R, atol=1e-9)


@given(st.integers(0, 2**31), st.integers(1, 8))
def test_spd_solve_residual(seed, n):
    r = np.random.default_rng(seed)
    M = random_spd(r, n, cond=1e4)
    R = r.standard_normal((n, 2))
    X = spd_solve(spd_factor(M), R)
    assert np.linalg.norm(M @ X - R) / np.linalg.norm(R) < 1e-8


def test_spd_solve_dimension_mismatch():
    with pytest.raises(ValueError):
        spd_solve(spd_factor(np.eye(3)), np.ones((2, 1)))


def test_jitter_rescues_semidefinite():
    v = np.array([1.0, 1.0, 1.0])
    M = np.outer(v, v)  # rank one
    F = spd_factor_jitter(M + 1e-18 * np.eye(3))
    assert np.isfinite(F.logdet)
    with pytest.raises(NotPositiveDefinite):
        spd_factor_jitter(-np.eye(2))
