"""Exception types shared across the library."""


class LoadTexError(Exception):
    """Base class for all loadtex errors."""


class MalformedFile(LoadTexError):
    """Image or model file is truncated or has an invalid header."""


class UnsupportedFormat(LoadTexError):
    """File format recognized but not supported (or not recognized at all)."""


class OutOfBounds(LoadTexError):
    """A requested sample coordinate falls outside the image."""


class DegenerateOutput(LoadTexError):
    """An operation would produce an empty or unusably small result."""


class DegenerateInput(LoadTexError):
    """Input is structurally valid but degenerate for this operation."""


class ConfigError(LoadTexError):
    """Configuration value violates a module precondition."""


class NegativeEntry(LoadTexError):
    """A histogram handed to root-normalization has a negative entry."""


class DimensionMismatch(LoadTexError):
    """Vector or matrix dimensions disagree with the model."""


class InsufficientSamples(LoadTexError):
    """Not enough samples to fit the requested model."""


class NumericalFailure(LoadTexError):
    """A fit produced non-finite values."""


class DegenerateLabels(LoadTexError):
    """Classifier training needs at least two distinct classes."""


class EmptyInput(LoadTexError):
    """An operation that needs at least one element received none."""


class ParseError(LoadTexError):
    """Manifest file is syntactically or semantically invalid."""


class MissingFile(LoadTexError):
    """Manifest references a file that does not exist."""


class EmptyClass(LoadTexError):
    """A class in the manifest has no usable entries."""


class InsufficientImages(LoadTexError):
    """A class has too few images for the requested split sizes."""
