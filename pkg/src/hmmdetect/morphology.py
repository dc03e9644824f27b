"""Grayscale morphology and the bottom-hat pre-processing stage.

Images are plain 2-D ``float64`` arrays indexed ``[row, col]`` with
nonnegative intensities (8-bit input maps to 0.0-255.0). Neighborhoods are
clipped to the image; no padding value is ever injected.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels


@dataclass(frozen=True)
class StructuringElement:
    """Set of integer ``(dx, dy)`` displacements, origin included."""

    offsets: tuple

    def __post_init__(self):
        offs = tuple(sorted({(int(dx), int(dy)) for dx, dy in self.offsets}))
        if not offs:
            raise ValueError("structuring element must be nonempty")
        if (0, 0) not in offs:
            raise ValueError("structuring element must contain the origin (0, 0)")
        object.__setattr__(self, "offsets", offs)

    @classmethod
    def square(cls, size=3):
        if size < 1 or size % 2 == 0:
            raise ValueError(f"square size must be a positive odd integer, got {size}")
        r = size // 2
        return cls(tuple((dx, dy) for dy in range(-r, r + 1) for dx in range(-r, r + 1)))

    @classmethod
    def from_mask(cls, mask):
        """Build from a boolean array whose center element is the origin."""
        mask = np.asarray(mask, dtype=bool)
        if mask.ndim != 2 or mask.shape[0] % 2 == 0 or mask.shape[1] % 2 == 0:
            raise ValueError("mask must be 2-D with odd side lengths")
        cy, cx = mask.shape[0] // 2, mask.shape[1] // 2
        rows, cols = np.nonzero(mask)
        return cls(tuple(zip((cols - cx).tolist(), (rows - cy).tolist())))

    def reflected(self):
        return StructuringElement(tuple((-dx, -dy) for dx, dy in self.offsets))

    def arrays(self):
        dx = np.array([o[0] for o in self.offsets], dtype=np.int64)
        dy = np.array([o[1] for o in self.offsets], dtype=np.int64)
        return dx, dy


DEFAULT_SE = StructuringElement.square(3)


def as_gray_image(values, width=None, height=None):
    """Validate and convert to a float64 ``(height, width)`` array.

    A flat sequence needs ``width`` and ``height`` and is read row-major.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 1:
        if width is None or height is None:
            raise ValueError("flat image data needs width and height")
        if arr.size != width * height:
            raise ValueError(f"expected {width * height} values, got {arr.size}")
        arr = arr.reshape(height, width)
    elif arr.ndim != 2:
        raise ValueError(f"image must be 2-D, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError("image must have at least one pixel")
    if not np.all(np.isfinite(arr)) or arr.min() < 0:
        raise ValueError("image values must be finite and nonnegative")
    return np.ascontiguousarray(arr)


def dilate(img, se=DEFAULT_SE):
    """``out[p] = max img[p - s]`` over ``s`` in ``se`` with ``p - s`` in the image."""
    dx, dy = se.arrays()
    return kernels.dilate(np.ascontiguousarray(img, dtype=np.float64), dx, dy)


def erode(img, se=DEFAULT_SE):
    """``out[p] = min img[p + s]`` over ``s`` in ``se`` with ``p + s`` in the image.

    This is the adjoint of :func:`dilate`, so
    ``erode(img, se) == -dilate(-img, se.reflected())`` exactly.
    """
    dx, dy = se.arrays()
    return kernels.erode(np.ascontiguousarray(img, dtype=np.float64), dx, dy)


def close(img, se=DEFAULT_SE):
    return erode(dilate(img, se), se)


def bottom_hat(img, se=DEFAULT_SE):
    """Closing minus the image. Emphasises small dark features; always >= 0."""
    img = np.ascontiguousarray(img, dtype=np.float64)
    return close(img, se) - img
