"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid or unsupported combination of user-facing options."""


class SolverDivergence(RuntimeError):
    """A Newton iteration failed to reach its tolerance.

    ``trace`` holds the update norms of every iteration that was attempted.
    """

    def __init__(self, message, trace=()):
        super().__init__(message)
        self.trace = list(trace)


class SingularityError(ArithmeticError):
    """The linear system of an implicit substep is singular."""
