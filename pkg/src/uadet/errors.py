"""Exception hierarchy shared across the toolkit.

Errors are split into three families so the CLI can map them to exit
codes: data that cannot be read (I/O), data that reads fine but violates
a contract (validation), and unusable configuration.
"""

from __future__ import annotations


class UadetError(Exception):
    """Base class for all toolkit errors."""


class IOFormatError(UadetError):
    """A file exists but cannot be parsed (corrupt header, bad line)."""


class ValidationError(UadetError):
    """Parsed data violates an invariant of its declared type."""


class ConfigError(UadetError):
    """A configuration value is out of range or internally inconsistent."""


class DimensionMismatch(ValidationError):
    """Two grids that must share a size do not."""


class NoForeground(ValidationError):
    """A mask operation that requires foreground pixels got an empty mask."""


class OutOfBounds(ValidationError):
    """A box does not lie inside its image extents."""


class ParseError(IOFormatError):
    """A structured text file has a malformed line or header."""

    def __init__(self, message: str, path=None, line: int | None = None):
        detail = message
        if path is not None:
            detail = f"{path}: {detail}"
        if line is not None:
            detail = f"{detail} (line {line})"
        super().__init__(detail)
        self.path = path
        self.line = line


class UnknownClass(ValidationError):
    """A label or prediction references a class id outside the vocabulary."""


class InvalidBox(ValidationError):
    """Box coordinates violate the normalized-box invariants."""


class MissingPredictions(ValidationError):
    """Mining was asked to run on images that have no prediction files."""

    def __init__(self, image_ids):
        self.image_ids = list(image_ids)
        shown = ", ".join(self.image_ids[:5])
        more = "" if len(self.image_ids) <= 5 else f" (+{len(self.image_ids) - 5} more)"
        super().__init__(f"no predictions for {len(self.image_ids)} image(s): {shown}{more}")


class EmptySplit(ValidationError):
    """An evaluation split contains no images."""


class DomainError(ValidationError):
    """A numeric argument is outside its mathematical domain."""


class EmptySelection(ValidationError):
    """A filter removed every prediction from a summary population."""
