"""Exception types shared across the package."""


class CircembedError(Exception):
    """Base class for all package-specific errors."""


class DataFormatError(CircembedError):
    """Malformed, truncated, or version-incompatible input file."""


class DegenerateTraceError(CircembedError):
    """A diagnostic was requested on a constant or otherwise unusable trace."""


class UndefinedMeanError(CircembedError):
    """Circular mean is undefined (near-zero resultant vector)."""


class GenerationError(CircembedError):
    """Synthetic instance generation failed (e.g. connectivity rejections)."""
