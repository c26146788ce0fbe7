"""Exception types shared across the solver."""


class FlowError(Exception):
    """Base class for all solver errors."""


class DomainError(FlowError):
    """A state left the physical domain (negative density, pressure, ...)."""


class VacuumError(FlowError):
    """The Riemann data would generate vacuum; the solver refuses."""


class ConvergenceError(FlowError):
    """An iterative solve failed to converge."""


class ScenarioError(FlowError):
    """A scenario file or scenario description is invalid."""
