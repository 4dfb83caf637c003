"""Exception and warning types shared across the package.

All errors derive from :class:`CvktError` (and ``ValueError``), so callers can
catch either the package base class or the builtin. The CLI maps each class to
a distinct exit code; see ``cvkt.cli``.
"""


class CvktError(ValueError):
    """Base class for all errors raised by this package."""


class DimensionError(CvktError):
    """Matrix or vector shapes are incompatible with the operation."""


class ArgumentError(CvktError):
    """An argument is out of its valid range or an input collection is empty."""


class DomainError(CvktError):
    """Input values lie outside the mathematical domain of the operation."""


class DegenerateInputError(CvktError):
    """An input is degenerate (e.g. constant matrix with zero centered norm)."""


class DegenerateTransformError(CvktError):
    """The transfer kernel collapsed to (numerically) zero."""


class NotPSDError(CvktError):
    """A matrix required to be positive semi-definite has a significantly
    negative eigenvalue."""


class ConfigurationError(CvktError):
    """A configuration object is internally inconsistent or incomplete."""


class ValidationError(CvktError):
    """A dataset or file violates a structural contract."""


class ManifestError(CvktError):
    """A dataset manifest could not be parsed; message carries field/line
    diagnostics."""


class InfeasibleMaskError(CvktError):
    """Requested missingness cannot satisfy the coverage constraints."""


class SelectionError(CvktError):
    """Model selection found no usable grid point."""


class DegenerateKernelWarning(UserWarning):
    """A predicted kernel was constant and post-processing fell back to the
    known-block mean."""


class MissingOverlapWarning(UserWarning):
    """A source view shares no observed samples with the view under
    completion; its features cannot inform the learned transform."""
