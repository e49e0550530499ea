"""Exception types shared across the package."""


class EasyGtError(Exception):
    """Base class for all easygt errors."""


class NotFound(EasyGtError):
    """A referenced file or image id does not exist."""


class DecodeError(EasyGtError):
    """File bytes could not be decoded as an image."""


class DegenerateChannel(EasyGtError):
    """A color channel has mean zero, so balancing would divide by zero."""


class DegenerateHistogram(EasyGtError):
    """Histogram has too few non-empty bins for the requested split."""


class InvalidAlpha(EasyGtError):
    """Threshold fusion weight outside [0, 1]."""


class ShapeMismatch(EasyGtError):
    """Two masks or images that must share dimensions do not."""


class EmptyDataset(EasyGtError):
    """An evaluation was requested over zero usable images."""


class InvalidSpec(EasyGtError):
    """Phantom parameters describe an empty or out-of-frame nucleus."""


class EmptySession(EasyGtError):
    """Session folder contains no supported images."""


class IoError(EasyGtError):
    """A filesystem operation failed (missing file, unwritable directory)."""
