"""Exception hierarchy.

Every domain error derives from :class:`RatDynError` so callers (and the CLI)
can separate domain failures from programming errors.
"""


class RatDynError(Exception):
    """Base class for all domain errors raised by ratdyn."""

    def to_dict(self):
        return {"error": type(self).__name__, "message": str(self)}


# projective geometry
class ZeroVector(RatDynError, ValueError):
    pass


class IndeterminatePoint(RatDynError, ValueError):
    pass


# polynomial algebra
class PolynomialSyntaxError(RatDynError, ValueError):
    """Raised by the polynomial parser; ``position`` is a 0-based offset."""

    def __init__(self, message, position, text=""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at position {position}")

    def to_dict(self):
        d = super().to_dict()
        d["position"] = self.position
        return d


class NotHomogeneous(RatDynError, ValueError):
    def __init__(self, message, monomials=()):
        self.monomials = list(monomials)
        super().__init__(message)


class DegenerateInput(RatDynError, ValueError):
    pass


# rational maps
class DegreeMismatch(RatDynError, ValueError):
    pass


class AllZero(RatDynError, ValueError):
    pass


class DimensionMismatch(RatDynError, ValueError):
    pass


class CollapsedComposition(RatDynError, ValueError):
    pass


class ResourceLimit(RatDynError, RuntimeError):
    pass


class PositiveDimensionalLocus(RatDynError, ValueError):
    pass


# solving
class NoConvergence(RatDynError, RuntimeError):
    def __init__(self, message, best=None):
        self.best = best
        super().__init__(message)


class CommonFactor(RatDynError, ValueError):
    pass


class ChartDegeneracy(RatDynError, ValueError):
    pass


class InfiniteFiber(RatDynError, ValueError):
    pass


# degrees
class UnstableCount(RatDynError, RuntimeError):
    def __init__(self, message, counts=()):
        self.counts = list(counts)
        super().__init__(message)


class RankDeficient(RatDynError, ValueError):
    pass


# measures / proximity
class DeadEnd(RatDynError, RuntimeError):
    pass


class IndeterminateOrbit(RatDynError, ValueError):
    pass


class SingularHit(RatDynError, ValueError):
    pass


class TargetContainsImage(RatDynError, ValueError):
    pass
