"""Exception hierarchy shared by all modules."""


class CoupledExtremalError(Exception):
    """Base class for errors raised by this package."""


class DimensionError(CoupledExtremalError, ValueError):
    """Array shapes do not match the declared dimensions."""


class ConeViolationError(CoupledExtremalError, ValueError):
    """A matrix expected to be positive semidefinite is not."""


class DecompositionError(CoupledExtremalError, ArithmeticError):
    """The pivoted block decomposition could not produce a well-conditioned K."""


class InvalidDirectionError(CoupledExtremalError, ValueError):
    """A perturbation direction leaks into the marginals."""


class DegenerateDirectionError(CoupledExtremalError, ValueError):
    """A perturbation direction is (numerically) zero."""


class UnboundedDirectionError(CoupledExtremalError, ArithmeticError):
    """Moving along a direction never reaches the PSD boundary."""


class NotInCError(CoupledExtremalError, ValueError):
    """A state is not a member of C(rho1, rho2)."""

    def __init__(self, violation):
        super().__init__(str(violation))
        self.violation = violation


class SpecError(CoupledExtremalError, ValueError):
    """Invalid construction parameters (e.g. a non-unitary matrix)."""


class WalkError(CoupledExtremalError, RuntimeError):
    """A facial walk step failed to reduce the rank."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
