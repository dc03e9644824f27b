"""Slow, obviously-correct reference implementations used as test oracles."""
import numpy as np


def naive_dilate(img, offsets):
    h, w = img.shape
    out = np.empty_like(img)
    for r in range(h):
        for c in range(w):
            vals = [img[r - dy, c - dx] for dx, dy in offsets
                    if 0 <= r - dy < h and 0 <= c - dx < w]
            out[r, c] = max(vals)
    return out


def naive_erode(img, offsets):
    h, w = img.shape
    out = np.empty_like(img)
    for r in range(h):
        for c in range(w):
            vals = [img[r + dy, c + dx] for dx, dy in offsets
                    if 0 <= r + dy < h and 0 <= c + dx < w]
            out[r, c] = min(vals)
    return out


def naive_bottom_hat(img, offsets):
    return naive_erode(naive_dilate(img, offsets), offsets) - img


def dense_filter_step(probs, frame, a, offsets):
    """Filter step with an explicit matrix and naive morphology."""
    bh = naive_bottom_hat(frame, offsets)
    lik = np.append(bh.ravel() + 1.0, 1.0)
    un = lik * (a @ probs)
    return un / un.sum()


def naive_zeta(grid):
    h, w = grid.shape
    out = np.zeros_like(grid)
    for r in range(h):
        for c in range(w):
            s = 0.0
            for dr in (-1, 0, 1):
                for dc in (-1, 0, 1):
                    if (dr or dc) and 0 <= r + dr < h and 0 <= c + dc < w:
                        s += grid[r + dr, c + dc]
            out[r, c] = grid[r, c] - s
    return out


def random_offsets(rng, max_size=9, radius=2):
    """Random structuring element offsets, origin included."""
    pool = [(dx, dy) for dx in range(-radius, radius + 1) for dy in range(-radius, radius + 1)
            if (dx, dy) != (0, 0)]
    k = int(rng.integers(0, max_size))
    pick = rng.choice(len(pool), size=k, replace=False)
    return [(0, 0)] + [pool[i] for i in pick]
