"""Exception types shared across the toolkit.

Class names double as the machine-readable error names the CLI prints on
stderr, so they are spelled without an ``Error`` suffix.
"""


class EmsegError(Exception):
    """Base class for all toolkit errors."""


# --- container I/O ---------------------------------------------------------

class BadMagic(EmsegError):
    """File does not start with the EMVOL magic bytes."""


class TruncatedFile(EmsegError):
    """File is shorter (or longer) than its header promises."""


class UnknownDtype(EmsegError):
    """Header dtype byte is not a known encoding."""


class DimOverflow(EmsegError):
    """A dimension is zero or the voxel count does not fit in 64 bits."""


class IoFailure(EmsegError):
    """Underlying OS-level read/write failure."""


# --- volume operations -----------------------------------------------------

class OutOfRangeProbability(EmsegError):
    """Probability values or threshold outside [0, 1]."""


class DegenerateSplit(EmsegError):
    """Validation split would be empty or cover everything."""


# --- patch extraction / reconstruction -------------------------------------

class PatchLargerThanVolume(EmsegError):
    """Requested patch shape exceeds the volume dimensions."""


class LayoutMismatch(EmsegError):
    """Layout is inconsistent with the supplied volume or patches."""


class WrongPatchCount(EmsegError):
    """Number of patches differs from the layout's origin count."""


class OddLength(EmsegError):
    """Spline window length must be even."""


class EmptyMask(EmsegError):
    """Mask contains no voxels."""


# --- augmentations ----------------------------------------------------------

class InterpolationOnMask(EmsegError):
    """An intensity-interpolating operation was requested on a binary mask."""


class BadKernelSize(EmsegError):
    """Filter kernel size must be an odd positive integer."""


# --- post-processing ---------------------------------------------------------

class EvenWindow(EmsegError):
    """Median window along z must be odd."""


class PredictorShapeMismatch(EmsegError):
    """Predictor returned a volume whose dims differ from its input."""


class PredictorRangeViolation(EmsegError):
    """Predictor returned values outside [0, 1]."""


class PredictorFailure(EmsegError):
    """External predictor process failed, timed out, or wrote no output."""


# --- metrics -----------------------------------------------------------------

class DimMismatch(EmsegError):
    """Two volumes that must share dimensions do not."""


class MissingLayout(EmsegError):
    """Evaluation mode requires a patch layout but none was given."""


# --- sweep DSL ---------------------------------------------------------------

class DslSyntaxError(EmsegError):
    """Search-space text failed to parse."""

    def __init__(self, message: str, pos: int | None = None, expected: str | None = None):
        self.message = message
        self.pos = pos
        self.expected = expected
        detail = message
        if pos is not None:
            detail += f" (at position {pos}"
            detail += f", expected {expected})" if expected else ")"
        super().__init__(detail)


class EmptyChoice(DslSyntaxError):
    """A choice[...] with no options."""


class BadStep(DslSyntaxError):
    """Stepped range with step <= 0."""


class ReversedRange(DslSyntaxError):
    """Range or stepped range with lo > hi."""


class DuplicateName(DslSyntaxError):
    """The same hyperparameter name appears twice in one space."""


class InfiniteSpace(EmsegError):
    """Grid enumeration requested over an entry with infinite cardinality."""
