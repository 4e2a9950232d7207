"""Black-Scholes basket market, lognormal discretization and payoffs.

Flat vectors of length ``M*N`` use the asset-fastest convention: entry
``k = j*M + i`` (zero based) belongs to asset ``i`` at monitoring date ``j``.
With this ordering the covariance of the sampled log-returns is ``T kron S``
where ``T[l, m] = min(t_l, t_m)`` and ``S[i, k] = sigma_i sigma_k rho_ik``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import erf, exp, log, sqrt

import numpy as np

from .errors import DecompositionError, ModelError
from .linalg import cholesky

SYMMETRY_TOL = 1e-12
WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class MarketParams:
    """Constant-volatility basket market and the Asian contract on it.

    ``weights`` has shape ``(M, N)``; ``None`` means equal weights ``1/(M N)``.
    """

    S0: np.ndarray
    r: float
    sigma: np.ndarray
    rho: np.ndarray
    schedule: np.ndarray
    K: float
    weights: np.ndarray | None = None

    def __post_init__(self):
        S0 = np.atleast_1d(np.asarray(self.S0, dtype=float))
        sigma = np.atleast_1d(np.asarray(self.sigma, dtype=float))
        rho = np.atleast_2d(np.asarray(self.rho, dtype=float))
        schedule = np.atleast_1d(np.asarray(self.schedule, dtype=float))
        M, N = S0.size, schedule.size
        if sigma.shape != (M,):
            raise ModelError(f"sigma must have length {M}, got shape {sigma.shape}")
        if rho.shape != (M, M):
            raise ModelError(f"rho must be {M}x{M}, got shape {rho.shape}")
        if np.any(S0 <= 0) or np.any(sigma <= 0):
            raise ModelError("initial prices and volatilities must be positive")
        if np.max(np.abs(rho - rho.T)) > SYMMETRY_TOL:
            raise ModelError("rho is not symmetric")
        if np.any(np.abs(np.diag(rho) - 1.0) > SYMMETRY_TOL):
            raise ModelError("rho must have a unit diagonal")
        if np.any(np.abs(rho) > 1.0 + SYMMETRY_TOL):
            raise ModelError("correlations must lie in [-1, 1]")
        if schedule[0] <= 0 or np.any(np.diff(schedule) <= 0):
            raise ModelError("schedule must be positive and strictly increasing")
        if self.K < 0:
            raise ModelError("strike must be nonnegative")
        if self.weights is None:
            weights = np.full((M, N), 1.0 / (M * N))
        else:
            weights = np.asarray(self.weights, dtype=float)
            if weights.shape != (M, N):
                raise ModelError(f"weights must be {M}x{N}, got shape {weights.shape}")
            if abs(weights.sum() - 1.0) > WEIGHT_TOL:
                raise ModelError(f"weights sum to {weights.sum()!r}, expected 1")
        for name, value in (("S0", S0), ("sigma", sigma), ("rho", rho),
                            ("schedule", schedule), ("weights", weights)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "r", float(self.r))
        object.__setattr__(self, "K", float(self.K))

    @property
    def M(self) -> int:
        return self.S0.size

    @property
    def N(self) -> int:
        return self.schedule.size

    @property
    def T(self) -> float:
        return float(self.schedule[-1])

    @property
    def dim(self) -> int:
        return self.M * self.N

    @property
    def discount(self) -> float:
        return exp(-self.r * self.T)

    def flat_weights(self) -> np.ndarray:
        """Weights flattened in the asset-fastest order."""
        return self.weights.T.ravel()

    def with_strike(self, K: float) -> "MarketParams":
        return MarketParams(self.S0, self.r, self.sigma, self.rho, self.schedule, K,
                            self.weights)


def table1_market(rho: float = 0.0, K: float = 100.0, M: int = 10, N: int = 250,
                  S0: float = 100.0, r: float = 0.04, T: float = 1.0,
                  sigma_low: float = 0.10, sigma_high: float = 0.50) -> MarketParams:
    """The benchmark basket: equal weights, equally spaced dates, volatilities
    spread linearly from ``sigma_low`` to ``sigma_high``."""
    if M == 1:
        sigma = np.array([sigma_low])
    else:
        sigma = sigma_low + np.arange(M) / (M - 1) * (sigma_high - sigma_low)
    corr = np.full((M, M), float(rho))
    np.fill_diagonal(corr, 1.0)
    schedule = T * np.arange(1, N + 1) / N
    return MarketParams(np.full(M, S0), r, sigma, corr, schedule, K)


def split_index(k: int, M: int) -> tuple[int, int]:
    """Map a one-based flat index to ``(asset, date)``: the asset is zero
    based, the date one based, as in ``k1 = (k-1) mod M``, ``k2 = (k-1)//M + 1``."""
    return (k - 1) % M, (k - 1) // M + 1


@dataclass(frozen=True)
class GlobalCovariance:
    """Kronecker factors of the covariance of the sampled log-returns."""

    asset_cov: np.ndarray
    time_matrix: np.ndarray
    schedule: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.asset_cov.shape[0] * self.time_matrix.shape[0]

    def materialize(self) -> np.ndarray:
        return np.kron(self.time_matrix, self.asset_cov)

    def diagonal(self) -> np.ndarray:
        return np.kron(np.diag(self.time_matrix), np.diag(self.asset_cov))


def build_covariance_factors(params: MarketParams) -> GlobalCovariance:
    """Return ``(S, T)`` with ``S = diag(sigma) rho diag(sigma)`` and
    ``T[l, m] = t_min(l, m)``. Raises :class:`ModelError` when ``rho`` is not
    positive semidefinite."""
    try:
        cholesky(params.rho)
    except DecompositionError as exc:
        raise ModelError(
            f"correlation matrix is not positive semidefinite: "
            f"leading minor of order {exc.pivot + 1} is negative") from exc
    asset_cov = np.outer(params.sigma, params.sigma) * params.rho
    time_matrix = np.minimum.outer(params.schedule, params.schedule)
    return GlobalCovariance(asset_cov, time_matrix, params.schedule)


def drift_vector(params: MarketParams) -> np.ndarray:
    """``mu_k = ln(w_k S_k(0)) + (r - sigma_k^2/2) t_k`` in asset-fastest order."""
    w = params.flat_weights()
    if np.any(w <= 0):
        raise ModelError("drift vector needs strictly positive weights (log of w*S0)")
    S0 = np.tile(params.S0, params.N)
    sig = np.tile(params.sigma, params.N)
    t = np.repeat(params.schedule, params.M)
    return np.log(w * S0) + (params.r - 0.5 * sig ** 2) * t


def basket_payoff(mu: np.ndarray, z: np.ndarray, K: float) -> np.ndarray | float:
    """``(sum_k exp(mu_k + z_k) - K)^+``; ``z`` may hold one path per row."""
    mu = np.asarray(mu, dtype=float)
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != mu.shape[-1]:
        raise ValueError(f"path length {z.shape[-1]} does not match drift length {mu.shape[-1]}")
    g = np.exp(z + mu).sum(axis=-1)
    out = np.maximum(g - K, 0.0)
    return float(out) if out.ndim == 0 else out


def log_geometric_mean(params: MarketParams) -> float:
    """Mean of the log of the weighted geometric average."""
    w = params.flat_weights()
    base = (np.log(np.tile(params.S0, params.N))
            + (params.r - 0.5 * np.tile(params.sigma, params.N) ** 2)
            * np.repeat(params.schedule, params.M))
    return float(w @ base)


def _norm_cdf(x: float) -> float:
    return 0.5 * (1.0 + erf(x / sqrt(2.0)))


def lognormal_call(m: float, s: float, K: float) -> float:
    """Undiscounted ``E[(exp(m + s eps) - K)^+]`` for standard normal ``eps``."""
    if K <= 0.0:
        return exp(m + 0.5 * s * s) - K
    if s <= 0.0:
        return max(exp(m) - K, 0.0)
    d1 = (m - log(K) + s * s) / s
    return exp(m + 0.5 * s * s) * _norm_cdf(d1) - K * _norm_cdf(d1 - s)


def geometric_oracle_price(params: MarketParams, C) -> float:
    """Closed-form price of the geometric-average Asian option.

    The log of the geometric average is ``m + B . eps`` with ``B = C^T w``, so
    the price only depends on ``||B||``, which is the same for every ``C`` with
    ``C C^T`` equal to the global covariance.
    """
    w = params.flat_weights()
    B = C.rmatvec(w) if hasattr(C, "rmatvec") else np.asarray(C).T @ w
    s = float(np.linalg.norm(B))
    return params.discount * lognormal_call(log_geometric_mean(params), s, params.K)
