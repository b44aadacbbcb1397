"""Error types shared across the package.

Plain ValueError is used for malformed inputs; the two classes below exist
because the CLI maps them to dedicated exit codes (2 and 3).
"""


class SizeCapExceeded(RuntimeError):
    """An enumeration or matrix build would exceed its configured state cap."""


class NumericalValidationError(RuntimeError):
    """A numerical sanity check failed (detailed balance, residuals, ...)."""
