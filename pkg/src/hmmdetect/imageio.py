"""Frame and debug-image file formats.

* binary PGM (``P5``, maxval <= 255) for frames
* raw little-endian float images: ``uint32 width, uint32 height`` followed by
  ``width * height`` float64 values row-major, optionally followed by extra
  float64 trailer values (used by belief snapshots)
"""
import struct
from pathlib import Path

import numpy as np

_RAW_HEADER = struct.Struct("<II")


class PGMError(ValueError):
    pass


def _pgm_tokens(data, count):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens = []
    pos = 0
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise PGMError("truncated PGM header")
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates header from raster
    return tokens, pos + 1


def read_pgm(path):
    """Read a binary 8-bit PGM as a float64 ``(height, width)`` array."""
    data = Path(path).read_bytes()
    tokens, offset = _pgm_tokens(data, 4)
    if tokens[0] != b"P5":
        raise PGMError(f"{path}: not a binary PGM (magic {tokens[0]!r})")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise PGMError(f"{path}: bad PGM header") from exc
    if width < 1 or height < 1:
        raise PGMError(f"{path}: empty image")
    if not 0 < maxval <= 255:
        raise PGMError(f"{path}: only 8-bit PGM supported (maxval {maxval})")
    raster = data[offset:offset + width * height]
    if len(raster) != width * height:
        raise PGMError(f"{path}: expected {width * height} pixel bytes, got {len(raster)}")
    img = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    return img.astype(np.float64)


def write_pgm(path, img):
    """Write an image as 8-bit binary PGM (values rounded and clipped to 0-255)."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("PGM image must be 2-D")
    raster = np.clip(np.rint(arr), 0, 255).astype(np.uint8)
    h, w = raster.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (w, h))
        fh.write(raster.tobytes())


def write_raw(path, img, extra=()):
    arr = np.ascontiguousarray(img, dtype="<f8")
    h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(_RAW_HEADER.pack(w, h))
        fh.write(arr.tobytes())
        if len(extra):
            fh.write(np.asarray(extra, dtype="<f8").tobytes())


def read_raw(path, n_extra=0):
    """Return ``(image, extra)`` from the raw float format."""
    data = Path(path).read_bytes()
    if len(data) < _RAW_HEADER.size:
        raise ValueError(f"{path}: truncated raw header")
    w, h = _RAW_HEADER.unpack_from(data)
    expected = _RAW_HEADER.size + 8 * (w * h + n_extra)
    if len(data) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, got {len(data)}")
    vals = np.frombuffer(data, dtype="<f8", offset=_RAW_HEADER.size).astype(np.float64)
    return vals[:w * h].reshape(h, w), vals[w * h:]
