"""Exception hierarchy shared by all modules.

Each class carries the process exit code the command line front end uses.
"""


class PlanaronError(Exception):
    exit_code = 1


class SchemaError(PlanaronError, ValueError):
    """Input file or config does not match the declared schema."""

    exit_code = 2


class DomainError(PlanaronError, ValueError):
    """An argument lies outside the region where a model is defined."""

    exit_code = 3


class ModelValidityError(DomainError):
    """The model's own validity assumptions are violated."""


class InsufficientDataError(DomainError):
    pass


class NoTransitionError(DomainError):
    pass


class ConvergenceError(PlanaronError, RuntimeError):
    """An iterative procedure stopped without meeting its tolerance.

    ``partial`` holds whatever partial result was available (partial sum,
    final parameters, cost trace, ...).
    """

    exit_code = 4

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class StiffnessError(ConvergenceError):
    pass
