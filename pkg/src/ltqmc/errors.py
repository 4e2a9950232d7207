"""Exception types raised across the package."""


class ModelError(ValueError):
    """Invalid market description (correlation, schedule, weights)."""


class DecompositionError(ValueError):
    """A factorization met an indefinite pivot."""

    def __init__(self, message: str, pivot: int):
        super().__init__(message)
        self.pivot = pivot


class RankDeficiencyError(ValueError):
    """An appended column lies (numerically) in the span of the current basis."""

    def __init__(self, message: str, residual_norm: float):
        super().__init__(message)
        self.residual_norm = residual_norm


class CapacityError(ValueError):
    """More Sobol' dimensions requested than the direction table provides."""


class SimulationError(RuntimeError):
    """Non-finite payoff encountered during a simulation batch."""
