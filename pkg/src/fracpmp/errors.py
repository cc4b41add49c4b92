"""Exception hierarchy shared by all solvers."""


class FracPmpError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgument(FracPmpError, ValueError):
    pass


class NonAlignedHorizon(InvalidArgument):
    """The horizon is not an integer multiple of the grid step."""


class OutOfDomain(FracPmpError, ValueError):
    pass


class SingularPoint(FracPmpError, ValueError):
    """A weakly singular kernel was sampled at its singularity."""


class NumericalBlowup(FracPmpError, ArithmeticError):
    """A marching solver produced a value above the blowup guard.

    Attributes
    ----------
    node : int
        Index of the first offending grid node.
    """

    def __init__(self, node, value):
        super().__init__(f"|y| = {value:.3e} exceeds guard at node {node}")
        self.node = node
        self.value = value


class Divergence(FracPmpError, ArithmeticError):
    pass


class InadmissibleDirection(FracPmpError, ValueError):
    pass


class NotConverged(FracPmpError, RuntimeError):
    """Raised by the sweep when ``max_iter`` is exhausted.

    Carries the last iterate so callers can inspect or restart from it.
    """

    def __init__(self, message, state=None, control=None, adjoint=None,
                 history=None):
        super().__init__(message)
        self.state = state
        self.control = control
        self.adjoint = adjoint
        self.history = list(history or [])


class ConfigError(FracPmpError, ValueError):
    def __init__(self, path, reason):
        super().__init__(f"{path}: {reason}")
        self.path = path
        self.reason = reason
