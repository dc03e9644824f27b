"""Per-pixel inner loops.

Every kernel has a numpy implementation (``np_*``) and, when numba is
importable and not disabled, a compiled twin (``nb_*``). The public names
(``dilate``, ``erode``, ``patch_gather``, ``neighbor_sum``) point at the
compiled versions when available. Both paths produce identical results; the
benchmark in ``benchmarks/bench_kernels.py`` compares their speed.

Offsets are given as parallel integer arrays ``dx`` (columns) and ``dy``
(rows). Images are 2-D float64 arrays indexed ``[row, col]``.
"""
import numpy as np

from ._accel import HAS_NUMBA, njit, prange

# nnan/ninf left out so max/min keep IEEE semantics on inf inputs
_FM = {"nsz", "arcp", "contract", "afn"}


def _shift_slices(n, d):
    """Destination/source slices for ``out[i] <- src[i - d]`` along one axis."""
    if d >= 0:
        return slice(d, n), slice(0, n - d)
    return slice(0, n + d), slice(-d, n)


# ---------------------------------------------------------------- numpy path


def np_dilate(img, dx, dy):
    h, w = img.shape
    out = np.full((h, w), -np.inf)
    for ox, oy in zip(dx, dy):
        if abs(ox) >= w or abs(oy) >= h:
            continue
        rd, rs = _shift_slices(h, int(oy))
        cd, cs = _shift_slices(w, int(ox))
        np.maximum(out[rd, cd], img[rs, cs], out=out[rd, cd])
    return out


def np_erode(img, dx, dy):
    h, w = img.shape
    out = np.full((h, w), np.inf)
    for ox, oy in zip(dx, dy):
        if abs(ox) >= w or abs(oy) >= h:
            continue
        # reflected neighborhood: out[p] <- img[p + s]
        rd, rs = _shift_slices(h, -int(oy))
        cd, cs = _shift_slices(w, -int(ox))
        np.minimum(out[rd, cd], img[rs, cs], out=out[rd, cd])
    return out


def np_patch_gather(src, weights, dx, dy):
    """out[p] = sum_o weights[o] * src[p - o] over in-image sources."""
    h, w = src.shape
    out = np.zeros((h, w))
    for wt, ox, oy in zip(weights, dx, dy):
        if wt == 0.0 or abs(ox) >= w or abs(oy) >= h:
            continue
        rd, rs = _shift_slices(h, int(oy))
        cd, cs = _shift_slices(w, int(ox))
        out[rd, cd] += wt * src[rs, cs]
    return out


def np_neighbor_sum(grid):
    """Sum over the 8-neighborhood of each pixel, zero padding."""
    h, w = grid.shape
    padded = np.zeros((h + 2, w + 2))
    padded[1:-1, 1:-1] = grid
    box = np.zeros((h, w))
    for r in range(3):
        for c in range(3):
            box += padded[r:r + h, c:c + w]
    return box - grid


# ---------------------------------------------------------------- numba path


# Row-at-a-time loops: the inner column loop has no bounds checks and
# vectorises. The origin offset is required, so rows start from the image
# itself instead of +-inf.


@njit(parallel=True, cache=True, fastmath=_FM)
def nb_dilate(img, dx, dy):
    h, w = img.shape
    out = np.empty((h, w))
    k = dx.shape[0]
    for r in prange(h):
        row = out[r]
        row[:] = img[r]
        for j in range(k):
            rr = r - dy[j]
            if rr < 0 or rr >= h:
                continue
            ox = dx[j]
            src = img[rr]
            for c in range(max(ox, 0), min(w, w + ox)):
                row[c] = max(row[c], src[c - ox])
    return out


@njit(parallel=True, cache=True, fastmath=_FM)
def nb_erode(img, dx, dy):
    h, w = img.shape
    out = np.empty((h, w))
    k = dx.shape[0]
    for r in prange(h):
        row = out[r]
        row[:] = img[r]
        for j in range(k):
            rr = r + dy[j]
            if rr < 0 or rr >= h:
                continue
            ox = dx[j]
            src = img[rr]
            for c in range(max(-ox, 0), min(w, w - ox)):
                row[c] = min(row[c], src[c + ox])
    return out


@njit(parallel=True, cache=True, fastmath=_FM)
def nb_patch_gather(src, weights, dx, dy):
    h, w = src.shape
    out = np.zeros((h, w))
    k = dx.shape[0]
    for r in prange(h):
        row = out[r]
        for j in range(k):
            rr = r - dy[j]
            if rr < 0 or rr >= h:
                continue
            ox = dx[j]
            wt = weights[j]
            s = src[rr]
            for c in range(max(ox, 0), min(w, w + ox)):
                row[c] += wt * s[c - ox]
    return out


@njit(parallel=True, cache=True, fastmath=_FM)
def nb_neighbor_sum(grid):
    h, w = grid.shape
    out = np.zeros((h, w))
    for r in prange(h):
        row = out[r]
        for rr in range(max(r - 1, 0), min(r + 2, h)):
            s = grid[rr]
            for c in range(w):
                acc = s[c]
                if c > 0:
                    acc += s[c - 1]
                if c < w - 1:
                    acc += s[c + 1]
                row[c] += acc
        for c in range(w):
            row[c] -= grid[r, c]
    return out


if HAS_NUMBA:
    BACKEND = "numba"
    dilate, erode = nb_dilate, nb_erode
    patch_gather, neighbor_sum = nb_patch_gather, nb_neighbor_sum
else:
    BACKEND = "numpy"
    dilate, erode = np_dilate, np_erode
    patch_gather, neighbor_sum = np_patch_gather, np_neighbor_sum
