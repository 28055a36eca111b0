"""Exception types raised by the integrator library."""


class EquipError(Exception):
    """Base class for all errors raised by :mod:`equip`."""


class InvalidArgumentError(EquipError, ValueError):
    pass


class UnsupportedStageCountError(InvalidArgumentError):
    pass


class NotFoundError(EquipError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class DomainError(EquipError, ArithmeticError):
    """An evaluator was called outside the domain of the Hamiltonian."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class StageSolverFailure(EquipError, ArithmeticError):
    """Simplified Newton on the stage equations did not converge."""

    def __init__(self, message, residual, iterations):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class EnergyRootNotFound(EquipError, ArithmeticError):
    """No root of the energy residual g(alpha) could be located.

    ``probes`` holds every ``(alpha, g)`` pair evaluated during the search.
    """

    def __init__(self, message, probes):
        super().__init__(message)
        self.probes = list(probes)


class IntegrationError(EquipError):
    """A step failed mid-integration; ``trajectory`` holds the accepted prefix."""

    def __init__(self, message, trajectory, cause):
        super().__init__(message)
        self.trajectory = trajectory
        self.cause = cause


class StudyDegenerateError(EquipError):
    pass
