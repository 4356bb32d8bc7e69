"""Exception hierarchy.

Every failure raised by the library derives from :class:`GeometryError`, so
callers that only care about "this check could not run" can catch one type.
"""


class GeometryError(Exception):
    """Base class for all library errors."""


class OutOfDomain(GeometryError):
    pass


class SignatureMismatch(GeometryError):
    pass


class BackendOrderTooLow(GeometryError):
    pass


class DegeneratePlane(GeometryError):
    pass


class UnsupportedIndex(GeometryError):
    pass


class NonpositiveWarp(GeometryError):
    pass


class FiberCurvatureUnknown(GeometryError):
    pass


class OutOfInterval(GeometryError):
    pass


class SampleSetEmpty(GeometryError):
    pass


class NotTimelike(GeometryError):
    pass


class NotClosedConformal(GeometryError):
    pass


class SingularV(GeometryError):
    """The conformal field vanishes, so its orthogonal leaf is undefined."""


class NotOrthogonalLeaf(GeometryError):
    pass


class NotSpacelike(GeometryError):
    pass


class DegenerateJacobian(GeometryError):
    pass


class TimeOrientationClash(GeometryError):
    pass


class QuadratureTooCoarse(GeometryError):
    pass


class LeftChart(GeometryError):
    pass


class IntegratorDivergence(GeometryError):
    pass


class ConformalFactorVanishes(GeometryError):
    pass


class HypothesisUnverified(GeometryError):
    pass


class AmbientNotConstantCurvature(GeometryError):
    pass


class NotConstantHr1(GeometryError):
    pass


# configuration / runner errors; the CLI maps these to exit status 2
class ConfigError(GeometryError):
    pass


class ConfigParse(ConfigError):
    pass


class UnknownCheck(ConfigError):
    pass


class UnresolvedReference(ConfigError):
    pass


class UnsupportedFormat(ConfigError):
    pass
