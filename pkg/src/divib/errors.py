"""Exception hierarchy shared by all modules."""


class DivibError(Exception):
    """Base class for every error raised by the package."""


class SupportViolation(DivibError):
    """A divergence would be infinite: mass where the reference has none."""


class LabelMismatch(DivibError):
    pass


class AlphabetMismatch(DivibError):
    pass


class ZeroMarginal(DivibError):
    def __init__(self, index, label=None):
        self.index = index
        self.label = label
        super().__init__(f"marginal of x={label!r} (index {index}) is zero")


class ZeroCellMass(DivibError):
    pass


class IncompatibleAlphabet(DivibError):
    pass


class CustomSupportViolation(DivibError):
    pass


class NonInteriorInput(DivibError):
    pass


class NoFreeSymbol(DivibError):
    pass


class NotConverged(DivibError):
    """Raised only by callers that want convergence failures to be fatal."""


class InfeasibleLambda(DivibError):
    pass


class SizeExceeded(DivibError):
    pass


class OrbitMassZero(DivibError):
    pass


class SupportNotInvariant(DivibError):
    pass


class BudgetExceeded(DivibError):
    pass


class InvalidProfile(DivibError):
    pass
