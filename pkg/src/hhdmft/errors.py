"""Domain-specific failure types shared across the workbench."""


class ConfigError(ValueError):
    """Malformed, unknown, or invariant-violating configuration input."""


class NumericalError(RuntimeError):
    """Base class for failures of the numerical pipeline itself."""


class EmptySectorError(NumericalError):
    """An excitation operator annihilated the state (zero-norm sector)."""


class DegenerateGroundStateError(NumericalError):
    """Ground state is degenerate and the caller did not opt into averaging."""


class ChainConsistencyError(NumericalError):
    """Recursion coefficients violated an exact-arithmetic consistency bound."""


class PoleHitError(NumericalError):
    """A resolvent was evaluated exactly on one of its poles."""


class IllConditionedTangentError(NumericalError):
    """Variational tangent space too singular to integrate through."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} at t={time:.6g}")
        self.time = time
