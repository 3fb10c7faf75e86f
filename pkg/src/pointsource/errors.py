"""Exception types raised across the package."""


class PointSourceError(Exception):
    """Base class for all package errors."""


# -- configuration / geometry ------------------------------------------------

class ConfigurationError(PointSourceError, ValueError):
    pass


class EmptyConfiguration(ConfigurationError):
    pass


class DuplicatePoint(ConfigurationError):
    pass


class OutsideAnnulus(ConfigurationError):
    pass


class DegenerateInput(ConfigurationError):
    pass


class ExhaustedCandidates(PointSourceError, RuntimeError):
    """No candidate axis cleared the forbidden directions."""


class ProjectionCollision(PointSourceError, ValueError):
    """Projected points coincide, or a projected dipole vanishes."""


class ZeroProjection(ProjectionCollision):
    pass


# -- evaluation ----------------------------------------------------------------

class DomainViolation(PointSourceError, ValueError):
    """Field point inside the unit ball, or source outside it."""


class BadOrder(PointSourceError, ValueError):
    pass


# -- matrices ------------------------------------------------------------------

class DuplicateNodes(PointSourceError, ValueError):
    pass


class ZeroNode(PointSourceError, ValueError):
    pass


class SingularBlock(PointSourceError, ArithmeticError):
    pass


class IllConditioned(PointSourceError, ArithmeticError):
    pass


class NonFinite(PointSourceError, ValueError):
    pass


# -- independence / reduction / probe -----------------------------------------

class InsufficientSamples(PointSourceError, ValueError):
    pass


class MassImbalance(PointSourceError, ValueError):
    pass


class BadSampler(PointSourceError, ValueError):
    pass


class ParseError(PointSourceError, ValueError):
    pass
