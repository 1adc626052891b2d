class ParameterError(ValueError):
    """A physical or protocol parameter is outside its allowed range."""


class GainError(ValueError):
    """Fidelity requested for an outcome that is not at unity signal gain."""


class DomainError(ValueError):
    """A closed-form expression was evaluated outside its real domain."""


class OptimizationError(RuntimeError):
    """The objective was non-finite everywhere on the search grid."""
