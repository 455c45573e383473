"""Exception types shared across the package."""


class NondifferentiablePoint(ValueError):
    """The analytic gradient formula is ill-defined at the requested point."""

    def __init__(self, x=None, message="objective is not differentiable at the given point"):
        super().__init__(message)
        self.x = x


class NondifferentiableSample(NondifferentiablePoint):
    """A sampled bundle point landed on the nondifferentiable set."""


class DimensionMismatch(ValueError):
    pass


class ZeroVector(ValueError):
    pass


class MaxIterationsExceeded(RuntimeError):
    pass


class PerturbationFailed(RuntimeError):
    pass
