"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class NHMechError(Exception):
    """Base class for every error raised by the library."""


class DimensionError(NHMechError, ValueError):
    """Input or output dimension does not match the declared map."""


class RegularityError(NHMechError):
    """The velocity Hessian of the Lagrangian is singular at the queried state."""


class CompatibilityError(NHMechError):
    """The constraint matrix is singular, so multipliers are not unique."""


class DomainError(NHMechError, ValueError):
    """A state or point lies outside the domain required by the operation."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class UnsupportedOperationError(NHMechError):
    """The operation needs data the system does not provide."""


class DegenerateFormError(NHMechError):
    """A two-form that must be nondegenerate is (numerically) degenerate."""

    def __init__(self, message: str, singular_value: float):
        super().__init__(message)
        self.singular_value = singular_value


class ConfigurationError(NHMechError, ValueError):
    """Invalid user configuration (unknown system, bad parameter, missing data)."""


class ClassificationError(NHMechError):
    """A symmetry-case precondition does not hold."""


class NumericalError(NHMechError):
    """Numerical failure during integration, tagged with the step index."""

    def __init__(self, message: str, step: int):
        super().__init__(f"step {step}: {message}")
        self.step = step
