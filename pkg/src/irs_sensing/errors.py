"""Shared exception types."""


class ContractError(ValueError):
    """An argument violates a documented precondition (shape, symmetry, range)."""


class EstimabilityError(RuntimeError):
    """The requested quantity is not estimable for this channel (rank deficiency)."""


class SynthesisError(ValueError):
    """Waveform synthesis is infeasible for the requested dwell length."""


class SolverError(RuntimeError):
    """The conic solver failed to return a usable iterate."""


class EstimationError(RuntimeError):
    """An estimator could not produce an estimate from the given data."""
