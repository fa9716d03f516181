"""Exception types shared across the pipeline."""


class DrforgeError(Exception):
    """Base class for all pipeline errors."""


class InvalidRadianceError(DrforgeError, ValueError):
    """Radiance input is negative or non-finite."""


class DomainError(DrforgeError, ValueError):
    """An argument violates an operation's precondition."""


class FormatError(DrforgeError, ValueError):
    """A file or record does not match the expected format/schema."""


class GenerationError(DrforgeError, RuntimeError):
    """Procedural generation failed (message names the offending seed)."""
