"""Exception types shared across the engine."""


class IvsrError(Exception):
    """Base class for all engine errors."""


class EmptyScene(IvsrError):
    """Scene has no collidable surface."""


class PixelOutOfRange(IvsrError):
    pass


class LocalizationMiss(IvsrError):
    """A detection ray left the scene without hitting a collidable surface."""


class ParseError(IvsrError):
    pass


class SchemaError(IvsrError):
    pass


class StorageError(IvsrError):
    pass


class NotFound(IvsrError):
    pass


class UnknownMaterial(IvsrError):
    pass


class OutOfBounds(IvsrError):
    pass


class UnknownPatch(IvsrError):
    pass


class BadWeights(IvsrError):
    pass


class EmptySeries(IvsrError):
    pass


class EmptyLibrary(IvsrError):
    pass


class EmptyGrid(IvsrError):
    pass


class NoMatches(IvsrError):
    pass


class UnknownScenario(IvsrError):
    pass


class IllegalTransition(IvsrError):
    pass


class MissingModifiedPlan(IvsrError):
    pass


class RouteBlocked(IvsrError):
    pass
