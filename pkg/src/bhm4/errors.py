"""Exception types raised across the package.

Every failure mode of the numerical pipeline gets its own class so callers
(and the CLI exit-code logic) can distinguish validation problems from
numerical breakdowns.
"""


class BhmError(Exception):
    """Base class for all package errors."""


class ValidationError(BhmError):
    """Bad inputs: wrong shapes, exponents, regions, configuration."""


class NumericalError(BhmError):
    """A numerical procedure failed to converge or broke down."""


# -- manifold ---------------------------------------------------------------

class OutsideTubularNeighborhood(ValidationError):
    pass


class NotOnManifold(ValidationError):
    pass


class NotTangent(ValidationError):
    pass


# -- grid -------------------------------------------------------------------

class GridTooCoarse(ValidationError):
    pass


class EmptyRegion(ValidationError):
    pass


class OutOfSupport(ValidationError):
    pass


class TooFewShells(ValidationError):
    pass


# -- elliptic ---------------------------------------------------------------

class SolverDiverged(NumericalError):
    pass


# -- tension / pohozaev -----------------------------------------------------

class NotManifoldValued(ValidationError):
    pass


# -- flow ---------------------------------------------------------------------

class StepDiverged(NumericalError):
    pass


class EmptyHistory(ValidationError):
    pass


# -- lorentz ------------------------------------------------------------------

class EmptySample(ValidationError):
    pass


class BadExponents(ValidationError):
    pass


class CellMismatch(ValidationError):
    pass


class TooFewAnnuli(ValidationError):
    pass


# -- s3harmonics ---------------------------------------------------------------

class DegreeTooHigh(ValidationError):
    pass


class IllConditionedFit(ValidationError):
    pass


class BadRadius(ValidationError):
    pass


class MeanNotZero(ValidationError):
    pass


# -- bubbletree -----------------------------------------------------------------

class ScaleFloorTooSmall(ValidationError):
    pass


class BisectionFailed(NumericalError):
    pass


class NeckUnresolvable(ValidationError):
    pass


class OverlappingBubbles(ValidationError):
    pass


# -- cli --------------------------------------------------------------------------

class ConfigInvalid(ValidationError):
    pass


class InputMissing(ValidationError):
    pass
