"""Small-scale oracle checks run by ``ltqmc selftest``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr
from scipy.stats import qmc

from . import sampling
from .analysis import build_method
from .engine import SimulationConfig, price_geometric
from .linalg import IncrementalQR, build_path_matrix, cholesky
from .lt import LTConfig, lt_build
from .market import (build_covariance_factors, drift_vector, geometric_oracle_price,
                     table1_market)


@dataclass(frozen=True)
class Check:
    suite: str
    invariant: str
    passed: bool
    detail: str


def _small_market(rho=0.3, K=100.0):
    return table1_market(rho, K, M=3, N=4)


def _decomposition(tol):
    market = _small_market()
    cov = build_covariance_factors(market)
    full = cov.materialize()
    mu = drift_vector(market)
    out = []
    for method in ("cholesky", "pca", "lt1", "lt2"):
        C = build_method(method, cov, mu, k_star=6).dense()
        err = np.max(np.abs(C @ C.T - full)) / np.max(np.abs(full))
        out.append(("C C^T = Sigma_MN (" + method + ")", err <= 1e-8 * tol, f"rel err {err:.2e}"))
    err = np.max(np.abs(build_path_matrix("cholesky", cov).dense() - cholesky(full)))
    out.append(("chol(T kron S) = chol(T) kron chol(S)", err <= 1e-12 * tol, f"max err {err:.2e}"))
    return out


def _qr(tol):
    rng = np.random.default_rng(3)
    X = rng.standard_normal((60, 12))
    qr = IncrementalQR(60)
    for col in X.T:
        qr.append(col)
    Q0, R0 = np.linalg.qr(X)
    signs = np.sign(np.diag(R0))
    err_q = np.max(np.abs(qr.Q - Q0 * signs))
    err_r = np.max(np.abs(qr.R - R0 * signs[:, None]))
    ortho = np.max(np.abs(qr.Q.T @ qr.Q - np.eye(12)))
    return [("append sequence = from-scratch QR", max(err_q, err_r) <= 1e-10 * tol,
             f"max err {max(err_q, err_r):.2e}"),
            ("Q^T Q = I", ortho <= 1e-10 * tol, f"max err {ortho:.2e}")]


def _lt(tol):
    market = _small_market()
    cov = build_covariance_factors(market)
    chol = build_path_matrix("cholesky", cov)
    w = market.flat_weights()
    # log-geometric payoff is linear in z: constant weights reproduce w
    C = lt_build(chol, np.log(w), LTConfig("lt1", 1))
    alpha = C.dense().T @ w
    B = np.linalg.norm(chol.rmatvec(w))
    rest = np.max(np.abs(alpha[1:])) / B
    A = C.rotation
    ortho = np.max(np.abs(A.T @ A - np.eye(A.shape[0])))
    return [("linear collapse alpha_1 = ||B||", abs(alpha[0] - B) <= 1e-12 * B * tol and rest <= 1e-12 * tol,
             f"alpha_1/||B|| - 1 = {alpha[0] / B - 1:.1e}, max tail {rest:.1e}"),
            ("A orthogonal", ortho <= 1e-10 * tol, f"max err {ortho:.2e}")]


def _geometric(tol):
    out = []
    market = _small_market(K=100.0)
    for method in ("cholesky", "lt1"):
        cfg = SimulationConfig(market, method, sampling.GeneratorSpec("pseudo", seed=11),
                               n_per_batch=4096, batches=10, k_star=4)
        res = price_geometric(cfg)
        C = build_method(method, build_covariance_factors(market), drift_vector(market), 4)
        exact = geometric_oracle_price(market, C)
        z = abs(res.price - exact) / res.rmse
        out.append((f"MC within 4 rmse of closed form ({method})", z <= 4.0 * tol, f"{z:.2f} rmse"))
    return out


def _sobol(tol, direction_file):
    sampling.load_direction_numbers.cache_clear()
    sampling.direction_integers.cache_clear()
    out = [("property A, 50 dimensions", sampling.property_a_holds(50, direction_file), "")]
    ref = np.array([0.5, 0.75, 0.25])
    err = np.max(np.abs(sampling.sobol_points(3, 1, path=direction_file)[:, 0] - ref))
    out.append(("first points 0.5, 0.75, 0.25", err <= 1e-15 * tol, f"max err {err:.1e}"))
    ours = sampling.sobol_points(256, 50, skip=0, path=direction_file)
    ref = qmc.Sobol(50, scramble=False, bits=sampling.BITS).random(256)
    err = np.max(np.abs(ours[1:] - ref[1:]))
    out.append(("unscrambled points = reference generator", err <= 1e-15 * tol, f"max err {err:.1e}"))
    x = sampling.sobol_points(2 ** 10, 50, scramble=5, path=direction_file)
    ok = all(np.unique(np.floor(x[:2 ** m, j] * 2 ** m)).size == 2 ** m
             for m in range(1, 11) for j in range(50))
    out.append(("dyadic equidistribution of 2^m points", ok, ""))
    return out


def _samplers(tol):
    u = sampling.lhs_uniforms(100, 5, seed=1)
    strata_ok = all(sorted(np.ceil(100 * u[:, j]).astype(int)) == list(range(1, 101)) for j in range(5))
    grid = (np.arange(1, 10 ** 5) - 0.5) / 10 ** 5
    err = float(np.max(np.abs(ndtr(sampling.inv_norm(grid)) - grid)))
    return [("LHS one point per stratum", strata_ok, ""),
            ("Phi(inv_norm(u)) = u", err <= 1e-9 * tol, f"max err {err:.1e}")]


def run_selftest(direction_file: str | None = None, tolerance_scale: float = 1.0) -> list[Check]:
    suites = {
        "decomposition": lambda: _decomposition(tolerance_scale),
        "qr": lambda: _qr(tolerance_scale),
        "lt": lambda: _lt(tolerance_scale),
        "sobol": lambda: _sobol(tolerance_scale, direction_file),
        "samplers": lambda: _samplers(tolerance_scale),
        "geometric": lambda: _geometric(tolerance_scale),
    }
    checks = []
    for suite, run in suites.items():
        try:
            for invariant, passed, detail in run():
                checks.append(Check(suite, invariant, bool(passed), detail))
        except Exception as exc:  # a broken suite is reported, not raised
            checks.append(Check(suite, "suite raised", False, f"{type(exc).__name__}: {exc}"))
    sampling.load_direction_numbers.cache_clear()
    sampling.direction_integers.cache_clear()
    return checks

