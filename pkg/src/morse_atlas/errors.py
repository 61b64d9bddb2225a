"""Exception hierarchy shared by all modules."""


class MorseAtlasError(Exception):
    """Base class for all errors raised by this package."""


class DisconnectedGraph(MorseAtlasError):
    pass


class UnknownVertex(MorseAtlasError):
    pass


class NotConnected(MorseAtlasError):
    pass


class OverlappingSets(MorseAtlasError):
    pass


class InvalidSpanningTree(MorseAtlasError):
    pass


class WordProblemUnavailable(MorseAtlasError):
    pass


class BallTooLarge(MorseAtlasError):
    pass


class MalformedBall(MorseAtlasError):
    pass


class NotInBall(MorseAtlasError):
    pass


class NotGeodesic(MorseAtlasError):
    pass


class NoSplitAtScale(MorseAtlasError):
    pass


class BadBasepoint(MorseAtlasError):
    pass


class ScaleMismatch(MorseAtlasError):
    pass


class NotRelHypStar(MorseAtlasError):
    pass


class HypothesisViolated(MorseAtlasError):
    """A reduction hypothesis failed.

    ``assumption`` is 1, 2 or 3 (undistorted/wide/infinite-index edge
    groups, relative hyperbolicity of distinguished vertices, edge
    coverage by distinguished vertices) and ``clause`` is a human
    readable description of the failing clause.
    """

    def __init__(self, assumption, clause):
        super().__init__(f"assumption ({assumption}): {clause}")
        self.assumption = assumption
        self.clause = clause


class BadMap(MorseAtlasError):
    pass


class WrongCase(MorseAtlasError):
    pass


class ScaleExceeded(MorseAtlasError):
    pass


class UnclassifiedCombination(MorseAtlasError):
    pass


class InternalTableError(MorseAtlasError):
    pass


class RefusesEstimate(MorseAtlasError):
    pass


class InputFormatError(MorseAtlasError):
    """Malformed input file; carries optional line/column context."""

    def __init__(self, message, line=None, column=None):
        loc = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + loc)
        self.line = line
        self.column = column
