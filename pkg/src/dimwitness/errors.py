"""Exception hierarchy shared by every module of the package."""


class WitnessError(Exception):
    """Base class for all package errors."""


class StructuralError(WitnessError, ValueError):
    """Shapes, dimensions, counts or indices do not fit together."""


class NumericIntegrityError(WitnessError, ArithmeticError):
    """A computed quantity left its admissible range (complex trace, NaN, ...)."""


class DegenerateInputError(WitnessError, ValueError):
    """Vectors that must be linearly independent are (numerically) not."""


class InvalidBlochVectorError(WitnessError, ValueError):
    """Bloch vector longer than one."""


class CapabilityError(WitnessError, ValueError):
    """Request outside what a routine is built to handle (e.g. exhaustive k > 4)."""


class UnknownEntryError(WitnessError, KeyError):
    """Registry lookup of a name that does not exist."""
