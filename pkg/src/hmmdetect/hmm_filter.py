"""HMM filter over pixel locations plus an out-of-image state.

The hidden state is one of ``N = width * height`` pixels (row-major) or the
extra out-of-image state stored last. Each step predicts with a sparse
transition patch and corrects with likelihoods ``bottom_hat + 1`` (1 for the
out-of-image state), then renormalises.
"""
import functools
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .imageio import read_raw, write_raw
from .morphology import DEFAULT_SE, bottom_hat

# (dx, dy) with dy = -1 the row above: self, left, right, three above-row neighbors
PATCH_OFFSETS = ((0, 0), (-1, 0), (1, 0), (-1, -1), (0, -1), (1, -1))

SUM_TOL = 1e-9

# renormalize: in-image destinations share the column mass
# exit: mass aimed off-image moves to the out-of-image state
BOUNDARY_MODES = ("renormalize", "exit")


@dataclass(frozen=True)
class BeliefState:
    width: int
    height: int
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.shape != (self.width * self.height + 1,):
            raise ValueError(
                f"belief for {self.width}x{self.height} needs {self.width * self.height + 1} "
                f"entries, got shape {p.shape}")
        object.__setattr__(self, "probs", p)

    @property
    def n_pixels(self):
        return self.width * self.height

    @property
    def out_of_image(self):
        return float(self.probs[-1])

    def pixel_grid(self):
        """View of the pixel entries as a ``(height, width)`` array."""
        return self.probs[:-1].reshape(self.height, self.width)

    def validate(self, tol=SUM_TOL):
        if np.any(self.probs < 0):
            raise ValueError("belief has negative entries")
        s = self.probs.sum()
        if abs(s - 1.0) > tol:
            raise ValueError(f"belief sums to {s!r}, not 1")
        return self


def init_belief(width, height):
    """Uniform belief ``1/(N+1)`` over all pixels and the out-of-image state."""
    if width < 1 or height < 1:
        raise ValueError(f"image dimensions must be positive, got {width}x{height}")
    n = width * height
    return BeliefState(width, height, np.full(n + 1, 1.0 / (n + 1)))


@dataclass(frozen=True)
class TransitionModel:
    """Motion patch plus birth/death probabilities.

    ``patch`` holds ``((dx, dy), prob)`` pairs over :data:`PATCH_OFFSETS`
    summing to ``1 - p_death``. ``p_birth`` is the total mass leaving the
    out-of-image state per step, spread uniformly over all pixels.
    """

    patch: tuple
    p_birth: float = 0.05
    p_death: float = 0.0
    boundary: str = "renormalize"

    def __post_init__(self):
        if self.boundary not in BOUNDARY_MODES:
            raise ValueError(f"boundary must be one of {BOUNDARY_MODES}, got {self.boundary!r}")
        items = self.patch.items() if isinstance(self.patch, dict) else self.patch
        patch = tuple(sorted(((int(o[0]), int(o[1])), float(p)) for o, p in items))
        object.__setattr__(self, "patch", patch)
        if not 0.0 <= self.p_birth <= 1.0:
            raise ValueError(f"p_birth must lie in [0, 1], got {self.p_birth}")
        if not 0.0 <= self.p_death < 1.0:
            raise ValueError(f"p_death must lie in [0, 1), got {self.p_death}")
        offsets = [o for o, _ in patch]
        if len(set(offsets)) != len(offsets):
            raise ValueError("duplicate patch offsets")
        for o, p in patch:
            if o not in PATCH_OFFSETS:
                raise ValueError(f"offset {o} is not in the transition patch")
            if p < 0:
                raise ValueError(f"negative patch probability at {o}")
        total = sum(p for _, p in patch)
        if abs(total - (1.0 - self.p_death)) > 1e-9:
            raise ValueError(f"patch probabilities sum to {total}, expected 1 - p_death = "
                             f"{1.0 - self.p_death}")

    @classmethod
    def from_weights(cls, weights=None, p_birth=0.05, p_death=0.0, boundary="renormalize"):
        """Scale relative per-offset weights (default uniform) to sum to ``1 - p_death``."""
        if weights is None:
            weights = {o: 1.0 for o in PATCH_OFFSETS}
        weights = {tuple(o): float(v) for o, v in dict(weights).items()}
        total = sum(weights.values())
        if total <= 0:
            raise ValueError("patch weights must have positive total")
        return cls(tuple((o, v * (1.0 - p_death) / total) for o, v in weights.items()),
                   p_birth=p_birth, p_death=p_death, boundary=boundary)

    def arrays(self):
        dx = np.array([o[0] for o, _ in self.patch], dtype=np.int64)
        dy = np.array([o[1] for o, _ in self.patch], dtype=np.int64)
        w = np.array([p for _, p in self.patch], dtype=np.float64)
        return dx, dy, w


@functools.lru_cache(maxsize=32)
def _column_terms(tm, width, height):
    """Per-source-pixel weight scale and mass sent off-image.

    With ``boundary="renormalize"`` offsets that leave the image are dropped
    and the surviving entries of the column rescaled so they still carry
    ``1 - p_death``; a pixel with no surviving weight sends that mass to the
    out-of-image state. With ``boundary="exit"`` weights are used as given
    and the off-image share goes to the out-of-image state.
    """
    dx, dy, w = tm.arrays()
    valid_w = np.zeros((height, width))
    cols = np.arange(width)
    rows = np.arange(height)[:, None]
    for ox, oy, p in zip(dx, dy, w):
        inside = (0 <= rows + oy) & (rows + oy < height) & (0 <= cols + ox) & (cols + ox < width)
        valid_w += p * inside
    keep = 1.0 - tm.p_death
    if tm.boundary == "exit":
        scale = np.ones((height, width))
        lost = np.maximum(keep - valid_w, 0.0)
        return scale, lost, bool(lost.any())
    scale = np.zeros((height, width))
    ok = valid_w > 0
    scale[ok] = keep / valid_w[ok]
    lost = np.where(ok, 0.0, keep)
    return scale, lost, float(lost.sum()) > 0


def transition_matrix(tm, width, height):
    """Dense ``(N+1, N+1)`` column-stochastic matrix ``A[dest, src]``."""
    n = width * height
    scale, lost, _ = _column_terms(tm, width, height)
    a = np.zeros((n + 1, n + 1))
    for src in range(n):
        r, c = divmod(src, width)
        for (ox, oy), p in tm.patch:
            rr, cc = r + oy, c + ox
            if 0 <= rr < height and 0 <= cc < width:
                a[rr * width + cc, src] += p * scale[r, c]
        a[n, src] = tm.p_death + lost[r, c]
    a[:n, n] = tm.p_birth / n
    a[n, n] = 1.0 - tm.p_birth
    return a


def predict(belief, tm):
    """Sparse ``A @ belief`` using the patch."""
    w, h = belief.width, belief.height
    grid = belief.pixel_grid()
    scale, lost, any_lost = _column_terms(tm, w, h)
    dx, dy, wt = tm.arrays()
    p_out = belief.probs[-1]
    out = np.empty_like(belief.probs)
    pix = kernels.patch_gather(np.ascontiguousarray(grid * scale), wt, dx, dy)
    pix += tm.p_birth * p_out / belief.n_pixels
    out[:-1] = pix.ravel()
    leaving = tm.p_death * grid.sum()
    if any_lost:
        leaving += float((grid * lost).sum())
    out[-1] = (1.0 - tm.p_birth) * p_out + leaving
    return BeliefState(w, h, out)


def measurement_likelihoods(morph):
    """Diagonal of the output-density matrix: ``morph + 1`` per pixel, 1 last."""
    morph = np.asarray(morph, dtype=np.float64)
    if np.any(morph < 0):
        raise ValueError("morphology output must be nonnegative")
    lik = np.empty(morph.size + 1)
    lik[:-1] = morph.ravel()
    lik[:-1] += 1.0
    lik[-1] = 1.0
    return lik


def update(predicted, lik):
    """Bayes correction. Returns ``(posterior, normalizer)``.

    ``normalizer`` is ``<1, B(y) A x>``, the inverse of the scalar
    normalisation factor. It is >= 1 because every likelihood is >= 1.
    """
    lik = np.asarray(lik, dtype=np.float64)
    if lik.shape != predicted.probs.shape:
        raise ValueError(f"likelihood length {lik.size} does not match belief "
                         f"length {predicted.probs.size}")
    if np.all(lik == 1.0):
        # B(y) is the identity and A is column-stochastic, so the normaliser is
        # exactly 1; dividing by a float re-sum would perturb the last ulp
        return BeliefState(predicted.width, predicted.height, predicted.probs.copy()), 1.0
    unnorm = lik * predicted.probs
    z = float(unnorm.sum())
    if not z > 0:
        raise FloatingPointError(f"normaliser {z!r} is not positive")
    unnorm /= z
    return BeliefState(predicted.width, predicted.height, unnorm), z


@dataclass(frozen=True)
class StepStats:
    normalizer: float
    max_pixel: float
    out_of_image: float


def filter_step(belief, frame, tm, se=DEFAULT_SE):
    """bottom-hat -> likelihoods -> predict -> update for one frame."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape != (belief.height, belief.width):
        raise ValueError(f"frame shape {frame.shape} does not match belief "
                         f"{belief.height}x{belief.width}")
    lik = measurement_likelihoods(bottom_hat(frame, se))
    post, z = update(predict(belief, tm), lik)
    stats = StepStats(z, float(post.probs[:-1].max()), post.out_of_image)
    return post, stats


def save_belief(path, belief, frame_index):
    """Write ``<path>.raw`` (pixels + out-of-image trailer) and ``<path>.json``."""
    path = Path(path)
    write_raw(path.with_suffix(".raw"), belief.pixel_grid(), extra=belief.probs[-1:])
    header = {"format": "hmmdetect-belief", "version": 1, "width": belief.width,
              "height": belief.height, "frame_index": int(frame_index)}
    path.with_suffix(".json").write_text(json.dumps(header, indent=2) + "\n")


def load_belief(path):
    """Inverse of :func:`save_belief`. Returns ``(belief, frame_index)``."""
    path = Path(path)
    header = json.loads(path.with_suffix(".json").read_text())
    grid, extra = read_raw(path.with_suffix(".raw"), n_extra=1)
    if grid.shape != (header["height"], header["width"]):
        raise ValueError("belief snapshot header does not match raster")
    probs = np.concatenate([grid.ravel(), extra])
    return BeliefState(header["width"], header["height"], probs), header["frame_index"]
