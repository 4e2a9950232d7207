"""Batch Monte Carlo estimation of Asian basket prices.

uniforms -> inv_norm -> eps -> z = C eps -> discounted payoff mean. Every batch
draws from its own substream, and the RMSE is the standard error of the
batch means.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from math import sqrt

import numpy as np

from .analysis import build_method
from .errors import SimulationError
from .linalg import PathMatrix
from .market import MarketParams, build_covariance_factors, drift_vector, log_geometric_mean
from .sampling import GeneratorSpec, inv_norm

PAYOFFS = ("arithmetic", "geometric")


@dataclass(frozen=True)
class SimulationConfig:
    market: MarketParams
    method: str = "lt1"
    generator: GeneratorSpec = field(default_factory=GeneratorSpec)
    n_per_batch: int = 8192
    batches: int = 10
    k_star: int = 50
    chunk: int = 2048

    def __post_init__(self):
        if self.n_per_batch < 2 or self.batches < 2:
            raise ValueError("need at least 2 paths per batch and 2 batches")

    @property
    def seed(self) -> int:
        return self.generator.seed


@dataclass(frozen=True)
class SimulationResult:
    """``batch_means`` are undiscounted payoff means; ``price`` and ``rmse``
    are discounted."""

    price: float
    rmse: float
    batch_means: np.ndarray
    decomposition_seconds: float
    simulation_seconds: float


def batch_statistics(batch_means) -> tuple[float, float]:
    """Mean of the batch means and its standard error (divisor ``B - 1``)."""
    x = np.asarray(batch_means, dtype=float)
    if x.size < 2:
        raise ValueError("batch statistics need at least two batches")
    return float(x.mean()), float(x.std(ddof=1) / sqrt(x.size))


def build_path(config: SimulationConfig) -> tuple[PathMatrix, float]:
    """Path matrix for the configured method and the seconds it took."""
    t0 = time.perf_counter()
    cov = build_covariance_factors(config.market)
    C = build_method(config.method, cov, drift_vector(config.market), config.k_star)
    return C, time.perf_counter() - t0


def simulate_payoffs(config: SimulationConfig, strikes=None, payoffs=PAYOFFS,
                     path: PathMatrix | None = None) -> dict[str, dict[float, SimulationResult]]:
    """Price several payoffs and strikes on common random numbers.

    Returns ``{payoff: {K: result}}``. ``path`` reuses a prebuilt path matrix
    (its build time is then reported as zero).
    """
    payoffs = tuple(payoffs)
    for name in payoffs:
        if name not in PAYOFFS:
            raise ValueError(f"payoff must be one of {PAYOFFS}, got {name!r}")
    market = config.market
    strikes = [market.K] if strikes is None else [float(k) for k in strikes]
    if path is None:
        path, decomposition_seconds = build_path(config)
    else:
        decomposition_seconds = 0.0
    d = market.dim
    mu = drift_vector(market)
    w = market.flat_weights()
    m_geo = log_geometric_mean(market)
    K = np.asarray(strikes)
    n = config.n_per_batch

    t0 = time.perf_counter()
    sums = np.zeros((len(payoffs), config.batches, K.size))
    for b in range(config.batches):
        U = config.generator.sample(n, d, stream=b)
        for start in range(0, n, config.chunk):
            z = path.apply(inv_norm(U[start:start + config.chunk]))
            for i, name in enumerate(payoffs):
                with np.errstate(over="ignore"):   # reported below
                    if name == "arithmetic":
                        g = np.exp(z + mu).sum(axis=1)
                    else:
                        g = np.exp(m_geo + z @ w)
                bad = ~np.isfinite(g)
                if bad.any():
                    raise SimulationError(f"non-finite {name} payoff in batch {b}, "
                                          f"path {start + int(np.argmax(bad))}")
                sums[i, b] += np.maximum(g[:, None] - K[None, :], 0.0).sum(axis=0)
    simulation_seconds = time.perf_counter() - t0

    means = sums / n
    out = {}
    for i, name in enumerate(payoffs):
        out[name] = {}
        for j, k in enumerate(strikes):
            mean, err = batch_statistics(means[i, :, j])
            out[name][k] = SimulationResult(market.discount * mean, market.discount * err,
                                            means[i, :, j].copy(), decomposition_seconds,
                                            simulation_seconds)
    return out


def simulate(config: SimulationConfig, strikes=None, payoff: str = "arithmetic",
             path: PathMatrix | None = None) -> dict[float, SimulationResult]:
    """Price one payoff for several strikes on common random numbers."""
    return simulate_payoffs(config, strikes, (payoff,), path)[payoff]


def simulate_price(config: SimulationConfig) -> SimulationResult:
    """Arithmetic Asian basket price at the market's strike."""
    return simulate(config)[config.market.K]


def price_geometric(config: SimulationConfig) -> SimulationResult:
    """Same pipeline on the geometric-average payoff, for validation against
    :func:`ltqmc.market.geometric_oracle_price`."""
    return simulate(config, payoff="geometric")[config.market.K]
