import numpy as np
import pytest

from ltqmc.analysis import contribution_ratios, truncation_dimension
from ltqmc.linalg import PathMatrix, build_path_matrix
from ltqmc.lt import (LTConfig, complete_orthogonal, lt_build, lt_candidate_column, lt_columns,
                      lt_weight_vector)
from ltqmc.market import MarketParams, build_covariance_factors, drift_vector

from conftest import small_market


def test_weight_vector_first_column_is_flat():
    for variant in ("lt1", "lt2"):
        np.testing.assert_allclose(lt_weight_vector([0.0, 0.0], np.zeros((2, 0)), 1, variant), [1, 1])


def test_weight_vector_second_column():
    a, b = 0.3, -0.7
    C = np.array([[a], [b]])
    lt2 = lt_weight_vector([0.0, 0.0], C, 2, "lt2")
    lt1 = lt_weight_vector([0.0, 0.0], C, 2, "lt1")
    # only the direction matters; results are rescaled by their largest entry
    np.testing.assert_allclose(lt2 / lt2[0], [1.0, np.exp(b - a)])
    np.testing.assert_allclose(lt1 / lt1[0], [1.0, np.exp((b * b - a * a) / 2)])
    with pytest.raises(ValueError):
        lt_weight_vector([0.0], np.zeros((1, 0)), 1, "lt3")


def test_candidate_column():
    C = np.random.default_rng(0).standard_normal((4, 4))
    d = np.array([0.2, 1.0, -3.0, 0.5])
    np.testing.assert_allclose(lt_candidate_column(d, np.eye(4)), d)
    np.testing.assert_allclose(lt_candidate_column(np.eye(4)[0], C), C[0])
    np.testing.assert_allclose(lt_candidate_column(d, PathMatrix.from_dense(C)), C.T @ d)


def test_scalar_market_candidate():
    m = MarketParams(S0=[100.0], r=0.04, sigma=[0.2], rho=[[1.0]], schedule=[0.5], K=100)
    mu = drift_vector(m)
    chol = build_path_matrix("cholesky", build_covariance_factors(m))
    B = lt_candidate_column(np.exp(mu), chol)
    np.testing.assert_allclose(B, [0.2 * np.sqrt(0.5) * np.exp(mu[0])])
    C = lt_build(chol, mu, LTConfig("lt1", 1))
    np.testing.assert_allclose(C.rotation, [[1.0]])
    np.testing.assert_allclose(C.dense(), chol.dense())


def test_complete_orthogonal():
    Q = np.linalg.qr(np.random.default_rng(1).standard_normal((5, 5)))[0]
    np.testing.assert_array_equal(complete_orthogonal(Q), Q)
    A = complete_orthogonal(np.array([[1.0], [0.0]]))
    np.testing.assert_allclose(np.abs(A[:, 1]), [0, 1])
    part = np.linalg.qr(np.random.default_rng(2).standard_normal((2500, 50)))[0]
    A = complete_orthogonal(part)
    np.testing.assert_array_equal(A[:, :50], part)
    assert np.max(np.abs(A.T @ A - np.eye(2500))) <= 1e-9


@pytest.mark.parametrize("variant", ["lt1", "lt2"])
def test_lt_factorizes_covariance_and_is_orthogonal(variant):
    m = small_market(M=3, N=4)
    cov = build_covariance_factors(m)
    C = lt_build(build_path_matrix("cholesky", cov), drift_vector(m), LTConfig(variant, 5))
    dense = C.dense()
    np.testing.assert_allclose(dense @ dense.T, cov.materialize(), atol=1e-13)
    np.testing.assert_allclose(C.rotation.T @ C.rotation, np.eye(12), atol=1e-13)
    assert C.k_star == 5 and C.method == variant


def test_linear_payoff_collapses_to_one_dimension():
    m = small_market(M=3, N=4)
    w = m.flat_weights()
    chol = build_path_matrix("cholesky", build_covariance_factors(m))
    C = lt_build(chol, np.log(w), LTConfig("lt1", 3))
    alpha = C.dense().T @ w
    B = np.linalg.norm(chol.rmatvec(w))
    assert alpha[0] == pytest.approx(B, rel=1e-12)
    assert np.max(np.abs(alpha[1:])) <= 1e-12 * B
    # the linear functional sum_k w_k z_k has truncation dimension 1
    lin = np.outer(alpha, alpha)
    assert np.sum(lin[:1, :1]) / np.sum(lin) == pytest.approx(1.0)


def test_lt2_column_is_leading_eigenvector_of_weighted_covariance():
    m = small_market(M=2, N=3, seed=4)
    cov = build_covariance_factors(m)
    mu = drift_vector(m)
    chol = build_path_matrix("cholesky", cov)
    L = chol.dense()
    qr, C_cols, _ = lt_columns(chol, mu, LTConfig("lt2", 4))
    for p in range(1, 5):
        d = np.exp(mu + C_cols[:, :p - 1].sum(axis=1))
        # sum_ij d_i d_j C_i. C_j.^T in rotation space, restricted to the
        # complement of the columns already chosen
        Mp = sum(d[i] * d[j] * np.outer(L[i], L[j]) for i in range(6) for j in range(6))
        P = np.eye(6) - qr.Q[:, :p - 1] @ qr.Q[:, :p - 1].T
        vals, vecs = np.linalg.eigh(P @ Mp @ P)
        v = vecs[:, -1]
        assert abs(abs(v @ qr.Q[:, p - 1]) - 1.0) <= 1e-10


def test_lt1_beats_cholesky_on_small_basket():
    m = small_market(M=3, N=6)
    cov = build_covariance_factors(m)
    mu = drift_vector(m)
    chol = build_path_matrix("cholesky", cov)
    lt1 = lt_build(chol, mu, LTConfig("lt1", 18))
    assert contribution_ratios(mu, lt1, 1)[0] > contribution_ratios(mu, chol, 1)[0]
    assert truncation_dimension(mu, lt1) <= truncation_dimension(mu, chol)


def test_lt_on_benchmark_leading_contributions(benchmark_inputs):
    _, cov, mu = benchmark_inputs["uncorrelated"]
    chol = build_path_matrix("cholesky", cov)
    lt1 = contribution_ratios(mu, lt_build(chol, mu, LTConfig("lt1", 10)), 3) * 100
    assert lt1[0] == pytest.approx(88.41, abs=0.05)
    assert lt1[2] == pytest.approx(93.53, abs=0.05)


def test_config_validation():
    with pytest.raises(ValueError):
        LTConfig("lt9")
    with pytest.raises(ValueError):
        LTConfig("lt1", 0)
    assert LTConfig("LT2").variant == "lt2"
