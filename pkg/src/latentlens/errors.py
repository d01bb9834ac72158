"""Root exception types shared across latentlens.

Module-specific errors subclass :class:`LatentLensError` and live next to the
code that raises them.
"""


class LatentLensError(Exception):
    """Base class for every error raised by latentlens."""


class VerificationFailure(LatentLensError):
    """Raised when a numerical verification or acceptance gate does not hold."""
