import numpy as np
import pytest

from ltqmc.market import MarketParams, build_covariance_factors, drift_vector, table1_market


@pytest.fixture(scope="session")
def benchmark_inputs():
    """(market, covariance factors, drift) for both correlation levels of the
    benchmark basket."""
    out = {}
    for label, rho in (("uncorrelated", 0.0), ("correlated", 0.4)):
        m = table1_market(rho)
        out[label] = (m, build_covariance_factors(m), drift_vector(m))
    return out


def small_market(M=3, N=4, rho=0.3, K=100.0, seed=0):
    """Random but well-conditioned small basket."""
    rng = np.random.default_rng(seed)
    R = np.full((M, M), rho) + (1 - rho) * np.eye(M)
    return MarketParams(S0=rng.uniform(80, 120, M), r=0.03, sigma=rng.uniform(0.1, 0.4, M),
                        rho=R, schedule=np.cumsum(rng.uniform(0.1, 0.5, N)), K=K)


def pytest_terminal_summary(terminalreporter):
    import sys
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "SUMMARY", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
