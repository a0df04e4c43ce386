"""Exception hierarchy for the d4 library.

Every library-raised error derives from :class:`D4Error` so callers can
catch one type at the boundary. The CLI maps subfamilies to exit codes.
"""


class D4Error(Exception):
    """Base class for all d4 errors."""


class ZeroVectorError(D4Error):
    """A vector expected to be nonzero has norm below the zero tolerance."""


class DimensionMismatchError(D4Error):
    """Operands disagree on vector length or matrix shape."""


class BasisFullError(D4Error):
    """The basis already spans the whole space; no complement remains."""


class LinearlyDependentError(D4Error):
    """A new direction lies (numerically) inside the span of the basis."""


class SingularSystemError(D4Error):
    """A linear system that should be regularized is not solvable."""


class NonConvergenceError(D4Error):
    """An iterative optimizer hit its iteration cap above tolerance."""


class DegenerateDataError(D4Error):
    """Input data admits no meaningful solution (e.g. identical points)."""


class DegenerateDirectionError(D4Error):
    """A direction has (numerically) zero norm in the relevant geometry."""


class NonSymmetricKernelError(D4Error):
    """A kernel matrix is not symmetric within tolerance."""


class MissingWordError(D4Error, KeyError):
    """A requested word is not in the embedding vocabulary."""


class EmptyClassError(D4Error):
    """A class label required for fitting has no instances."""


class EmptySetAfterLookupError(D4Error):
    """A word set became empty after dropping out-of-vocabulary words."""


class ZeroVarianceError(D4Error):
    """A statistic that must be standardized has zero variance."""


class FileFormatError(D4Error):
    """A file does not conform to its declared on-disk format."""


class MalformedHeaderError(FileFormatError):
    """An embedding or matrix file header cannot be parsed."""


class TruncatedRecordError(FileFormatError):
    """A binary record ends before its declared payload is complete."""


class DuplicateWordWarning(UserWarning):
    """A vocabulary file repeats a word; the first occurrence is kept."""
