"""Exception hierarchy shared by all bellforge modules."""


class BellforgeError(Exception):
    pass


# probability tables

class ProbabilityError(BellforgeError, ValueError):
    pass


class NormalizationError(ProbabilityError):
    pass


class IncompleteError(ProbabilityError):
    pass


class RangeError(ProbabilityError):
    pass


class UnknownVariable(ProbabilityError, KeyError):
    pass


class ShapeMismatch(ProbabilityError):
    pass


# Bell metrics and models

class UnknownSetting(BellforgeError, KeyError):
    pass


class EmptyGrid(BellforgeError, ValueError):
    pass


class ComposeError(BellforgeError, ValueError):
    pass


# lattices

class TooManySpins(BellforgeError, ValueError):
    pass


class PartitionError(BellforgeError, ValueError):
    pass


class BadArrangement(BellforgeError, ValueError):
    pass


class LatticeError(BellforgeError, ValueError):
    """Malformed lattice definition (unknown nodes, self-loops, duplicates)."""


# coupling search

class BadSymmetry(BellforgeError, ValueError):
    pass


class SpaceTooLarge(BellforgeError, ValueError):
    pass


class BadStart(BellforgeError, ValueError):
    pass


class BadSlice(BellforgeError, ValueError):
    pass


# CLI

class ConfigError(BellforgeError):
    pass


class IoError(BellforgeError, OSError):
    """A report or input document could not be read or written."""
