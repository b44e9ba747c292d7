"""Exception types raised across the package."""


class RegimeError(ValueError):
    """A formula was requested outside the drive regime it is valid in."""


class LongTimeError(ValueError):
    """The long-encoding-time condition of an asymptotic form is violated."""


class ResonanceError(ZeroDivisionError):
    """A bath frequency sits on a pole of the Laplace-inverted coefficients."""


class IllConditionedDerivative(ArithmeticError):
    """Central differences at step h and h/2 disagree beyond the gate."""


class ConvergenceError(RuntimeError):
    """An adaptive integrator or quadrature failed to converge."""
