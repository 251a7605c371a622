"""Exception hierarchy. CLI exit codes key off the two base classes."""


class WelanderError(Exception):
    pass


class InvalidParameterError(WelanderError, ValueError):
    """Parameters or configuration violate their invariants."""


class NumericalError(WelanderError, RuntimeError):
    """A numerical procedure failed to produce a trustworthy result."""


class ConvergenceError(NumericalError):
    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class StiffnessError(NumericalError):
    def __init__(self, message: str, last_state=None, t: float | None = None):
        super().__init__(message)
        self.last_state = last_state
        self.t = t


class GeometryError(NumericalError):
    """Degenerate event geometry on the switching line."""


class ChatterError(NumericalError):
    pass


class EscapeError(NumericalError):
    """An orbit did not return to the section within the horizon."""


class ManifoldTypeError(WelanderError, TypeError):
    """Requested invariant manifold does not exist for this (pseudo-)equilibrium."""


class DomainError(WelanderError, ValueError):
    """Argument outside the domain where the quantity is defined."""
