"""Exception hierarchy.

Numerical failures and model/domain failures are kept apart so the CLI can map
them onto distinct exit codes.
"""


class WhithamError(Exception):
    """Base class for all package errors."""


class ModelError(WhithamError):
    """Problems with a model, its parameters or its domain of existence."""


class NumericalError(WhithamError):
    """A numerical procedure failed or produced an inconsistent result."""


# pencil
class SingularLeadingCoefficient(NumericalError):
    pass


class DegenerateRoot(NumericalError):
    pass


class NotARoot(NumericalError):
    pass


# model
class OutsideDomain(ModelError):
    pass


class SymmetryViolation(ModelError):
    pass


class NonexistentWavetrain(OutsideDomain):
    pass


class InvalidBranch(ModelError):
    pass


class EllipticSide(ModelError):
    pass


class InvalidParameters(ModelError):
    pass


# coalescence
class NoConvergence(NumericalError):
    pass


class HigherDegeneracy(NumericalError):
    pass


class DegenerateDenominator(NumericalError):
    pass


class NotSolvable(NumericalError):
    pass


class ChainTerminationFailure(NumericalError):
    pass


class ConsistencyError(NumericalError):
    """Two independent evaluation routes disagree beyond tolerance."""


class NoSplitDetected(NumericalError):
    pass


# boussinesq
class DegenerateCoefficient(NumericalError):
    def __init__(self, name, message=None):
        self.name = name
        super().__init__(message or f"coefficient {name!r} vanishes")


class NoSolitaryWave(ModelError):
    pass


class UnstableStep(NumericalError):
    pass


class BlowUp(NumericalError):
    def __init__(self, time, trajectory=None):
        self.time = time
        self.trajectory = trajectory
        super().__init__(f"solution blew up at t={time:.6g}")


class ConfigError(WhithamError):
    pass
