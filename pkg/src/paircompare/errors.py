"""Exception types raised across the package."""


class PairwiseError(ValueError):
    """Base class for all errors raised by ``paircompare``."""


class OutcomeNotInSupport(PairwiseError):
    pass


class UnsupportedForContinuousSupport(PairwiseError):
    pass


class UnknownModel(PairwiseError):
    pass


class InvalidParameter(PairwiseError):
    pass


class InvalidProbability(PairwiseError):
    pass


class VertexOutOfRange(PairwiseError, IndexError):
    pass


class DimensionMismatch(PairwiseError):
    pass


class ParseError(PairwiseError):
    pass


class SelfComparison(PairwiseError):
    pass


class UnrecognizedScore(PairwiseError):
    pass


class IsolatedVertex(PairwiseError):
    pass


class InvalidAlpha(PairwiseError):
    pass


class ZeroDegree(PairwiseError):
    pass


class DisconnectedGraph(PairwiseError):
    pass


class SeriesDivergence(PairwiseError):
    """The Neumann series for the normalized-Laplacian pseudoinverse does not
    converge (connected but bipartite weighted graph)."""


class EmptyInput(PairwiseError):
    pass


class ConfigInvalid(PairwiseError):
    pass
