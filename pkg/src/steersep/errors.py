"""Exception hierarchy shared by the kernels, samplers and runner."""


class SteerSepError(Exception):
    pass


class DomainError(SteerSepError, ValueError):
    pass


class NonRealDeterminant(SteerSepError, ArithmeticError):
    pass


class ConvergenceFailure(SteerSepError, ArithmeticError):
    pass


class DegenerateReducedState(SteerSepError, ArithmeticError):
    """Reduced Bloch vector at the sphere surface; ellipsoid volume undefined."""


class SingularSpectrum(SteerSepError, ArithmeticError):
    pass


class DegenerateDraw(SteerSepError, ArithmeticError):
    pass


class IterationBudgetExceeded(SteerSepError, RuntimeError):
    pass


class ZeroDenominatorPochhammer(SteerSepError, ZeroDivisionError):
    def __init__(self, name, value):
        super().__init__(f"Pochhammer factor {name} vanishes (value {value})")
        self.name = name
        self.value = value


class InvariantViolation(SteerSepError, RuntimeError):
    """A sampled state broke a physical invariant; signals a kernel bug."""

    def __init__(self, message, matrix=None):
        super().__init__(message)
        self.matrix = matrix


class RangeViolation(InvariantViolation):
    pass


class EmptyAccumulator(SteerSepError, ValueError):
    pass


class LayoutMismatch(SteerSepError, ValueError):
    pass
