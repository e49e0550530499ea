"""Binary mask PNG serialization: 8-bit grayscale, 0 = background, 255 = nucleus."""

from __future__ import annotations

import io
import os

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeError, NotFound
from .thresholding import BinaryMask


def mask_to_png_bytes(mask: BinaryMask) -> bytes:
    """Encode a mask as PNG bytes; identical masks encode to identical bytes."""
    plane = np.where(mask.bits, np.uint8(255), np.uint8(0))
    buf = io.BytesIO()
    Image.fromarray(plane, "L").save(buf, format="PNG")
    return buf.getvalue()


def save_mask(mask: BinaryMask, path: str | os.PathLike) -> None:
    with open(path, "wb") as fh:
        fh.write(mask_to_png_bytes(mask))


def load_mask(path: str | os.PathLike) -> BinaryMask:
    """Read a mask PNG; any non-zero pixel counts as nucleus.

    Raises:
        NotFound: the path does not exist.
        DecodeError: the bytes cannot be decoded.
    """
    if not os.path.exists(path):
        raise NotFound(f"no such mask file: {path}")
    try:
        with Image.open(path) as img:
            plane = np.asarray(img.convert("L"))
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise DecodeError(f"cannot decode mask {path}: {exc}") from exc
    return BinaryMask(plane > 127)
