"""Exception types raised across the package."""


class InvalidArgument(ValueError):
    pass


class InvalidParams(ValueError):
    pass


class ConvergenceFailure(RuntimeError):
    """Quadrature did not reach the requested tolerance."""

    def __init__(self, message, error_estimate):
        super().__init__(f"{message} (achieved error estimate {error_estimate:.3e})")
        self.error_estimate = error_estimate


class SolverFailure(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class ManifoldInvalid(RuntimeError):
    """The lowest triplets are not degenerate; no 8-state ground manifold."""


class AlignmentFailure(RuntimeError):
    pass


class UndefinedPostState(ValueError):
    pass


class IntegratorFailure(RuntimeError):
    pass


class ResourceLimit(MemoryError):
    pass
