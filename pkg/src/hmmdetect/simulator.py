"""Seeded synthetic near-collision encounters.

A dim dark target emerges over a static textured cloud background. The
background is multi-octave value noise plus compact dark cloud blobs that
fade in and then vanish; the blobs are the deliberate false-alarm source. Target
motion never leaves the transition patch (at most one pixel sideways or up
per frame, never down), so the filter's motion model is correct for these
sequences.

Every frame is a pure function of ``(scenario, frame index)``.
"""
import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import ndtr

from .imageio import read_pgm, write_pgm

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class CloudBlob:
    x: float
    y: float
    size: float          # Gaussian sigma in pixels
    contrast: float      # peak darkening
    start: int           # first frame the blob is visible
    stop: int            # frame after the last visible frame
    fade: int = 4        # frames to ramp in / out
    length: float = 0.0  # spacing of the two lobes of an elongated cloud
    angle: float = 0.0   # lobe axis, radians from +x

    def profile(self, height, width, spread=1.0):
        """Unit-contrast darkening: one Gaussian, or two lobes ``length`` apart.

        ``spread`` widens every lobe, used while the cloud dissolves.
        """
        sigma = self.size * spread
        if self.length <= 0:
            return gaussian_spot(height, width, self.x, self.y, sigma)
        hx = 0.5 * self.length * np.cos(self.angle)
        hy = 0.5 * self.length * np.sin(self.angle)
        return (gaussian_spot(height, width, self.x - hx, self.y - hy, sigma)
                + gaussian_spot(height, width, self.x + hx, self.y + hy, sigma))


@dataclass(frozen=True)
class CloudTexture:
    octaves: int = 3
    amplitude: float = 0.0
    scale: float = 24.0
    blobs: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "blobs", tuple(
            b if isinstance(b, CloudBlob) else CloudBlob(**b) for b in self.blobs))
        if self.octaves < 1:
            raise ValueError("clutter.octaves must be >= 1")
        if self.amplitude < 0:
            raise ValueError("clutter.amplitude must be >= 0")
        if self.scale <= 0:
            raise ValueError("clutter.scale must be positive")


@dataclass(frozen=True)
class EncounterScenario:
    name: str
    width: int
    height: int
    frame_count: int
    onset_frame: int
    trajectory: tuple                 # per-frame (x, y) sub-pixel centre
    seed: int = 0
    has_target: bool = True
    background: float = 170.0
    contrast_start: float = 1.0
    contrast_rate: float = 0.5        # per frame after onset
    contrast_max: float = 40.0
    radius_start: float = 0.3         # Gaussian sigma, pixels
    radius_growth: float = 0.02
    radius_max: float = 3.0
    initial_range_m: float = 4000.0
    closing_speed_m_per_frame: float = 15.0
    noise_sigma: float = 2.0
    clutter: CloudTexture = field(default_factory=CloudTexture)

    def __post_init__(self):
        traj = tuple((float(x), float(y)) for x, y in self.trajectory)
        object.__setattr__(self, "trajectory", traj)
        if isinstance(self.clutter, dict):
            object.__setattr__(self, "clutter", CloudTexture(**self.clutter))
        self.validate()

    def validate(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("scenario dimensions must be positive")
        if not 0 <= self.onset_frame < self.frame_count:
            raise ValueError("onset_frame must lie in [0, frame_count)")
        if len(self.trajectory) != self.frame_count:
            raise ValueError("trajectory length must equal frame_count")
        xy = np.array(self.trajectory)
        d = np.diff(xy, axis=0)
        if np.any(np.abs(d[:, 0]) > 1.0) or np.any(d[:, 1] > 0.0) or np.any(d[:, 1] < -1.0):
            raise ValueError("trajectory steps must stay inside the transition patch")
        if np.any(xy < -0.5) or np.any(xy[:, 0] >= self.width - 0.5) or \
                np.any(xy[:, 1] >= self.height - 0.5):
            raise ValueError("trajectory leaves the image")
        if self.range_m(self.frame_count - 1) <= 0:
            raise ValueError("range must stay positive over the sequence")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")

    def range_m(self, k):
        return self.initial_range_m - k * self.closing_speed_m_per_frame

    def contrast(self, k):
        if not self.has_target or k < self.onset_frame:
            return 0.0
        grown = self.contrast_start + self.contrast_rate * (k - self.onset_frame)
        return min(self.contrast_max, grown)

    def radius(self, k):
        grown = self.radius_start + self.radius_growth * max(k - self.onset_frame, 0)
        return min(self.radius_max, grown)

    def to_json(self):
        doc = asdict(self)
        doc["schema_version"] = SCHEMA_VERSION
        doc["trajectory"] = [list(p) for p in self.trajectory]
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        version = doc.pop("schema_version", None)
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported scenario schema_version {version!r}")
        clutter = doc.pop("clutter")
        clutter["blobs"] = tuple(CloudBlob(**b) for b in clutter.get("blobs", ()))
        return cls(clutter=CloudTexture(**clutter), **doc)


@dataclass
class GroundTruth:
    width: int
    pixels: list       # per frame: row-major index or None
    ranges_m: list

    def xy(self, k):
        p = self.pixels[k]
        if p is None:
            return None
        y, x = divmod(p, self.width)
        return x, y

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["frame", "x", "y", "range_m"])
            for k, r in enumerate(self.ranges_m):
                xy = self.xy(k)
                x, y = ("", "") if xy is None else xy
                wr.writerow([k, x, y, repr(float(r))])

    @classmethod
    def read_csv(cls, path, width):
        pixels, ranges = [], []
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                if row["x"] == "":
                    pixels.append(None)
                else:
                    pixels.append(int(row["y"]) * width + int(row["x"]))
                ranges.append(float(row["range_m"]))
        return cls(width, pixels, ranges)


def _fade(t):
    return t * t * t * (t * (t * 6 - 15) + 10)


def value_noise(height, width, scale, rng):
    """Single octave of smooth lattice noise in [-1, 1]."""
    scale = max(float(scale), 1.0)
    gh = int(np.ceil(height / scale)) + 2
    gw = int(np.ceil(width / scale)) + 2
    lattice = rng.uniform(-1.0, 1.0, size=(gh, gw))
    ys = np.arange(height) / scale
    xs = np.arange(width) / scale
    yi = ys.astype(int)
    xi = xs.astype(int)
    fy = _fade(ys - yi)[:, None]
    fx = _fade(xs - xi)[None, :]
    v00 = lattice[yi][:, xi]
    v01 = lattice[yi][:, xi + 1]
    v10 = lattice[yi + 1][:, xi]
    v11 = lattice[yi + 1][:, xi + 1]
    top = v00 + fx * (v01 - v00)
    bot = v10 + fx * (v11 - v10)
    return top + fy * (bot - top)


def cloud_texture(height, width, octaves, scale, rng):
    """Multi-octave value noise normalised to roughly [-1, 1]."""
    total = np.zeros((height, width))
    amp, norm = 1.0, 0.0
    for o in range(octaves):
        total += amp * value_noise(height, width, scale / 2 ** o, rng)
        norm += amp
        amp *= 0.5
    return total / norm


def gaussian_spot(height, width, x, y, sigma):
    """Area-weighted Gaussian profile with unit peak for a wide spot.

    Each pixel gets the Gaussian integrated over its unit square, scaled by
    ``2 pi sigma^2``; a sub-pixel spot therefore deposits well under one
    pixel of contrast.
    """
    sigma = max(float(sigma), 1e-3)
    cx = np.arange(width)
    cy = np.arange(height)
    gx = ndtr((cx + 0.5 - x) / sigma) - ndtr((cx - 0.5 - x) / sigma)
    gy = ndtr((cy + 0.5 - y) / sigma) - ndtr((cy - 0.5 - y) / sigma)
    return 2.0 * np.pi * sigma ** 2 * np.outer(gy, gx)


def _rng(sc, *stream):
    return np.random.default_rng(np.random.SeedSequence([sc.seed & (2 ** 64 - 1), *stream]))


def render_background(sc):
    """Static sky plus cloud texture (no blobs, no target, no noise)."""
    bg = np.full((sc.height, sc.width), float(sc.background))
    cl = sc.clutter
    if cl.amplitude > 0:
        bg += cl.amplitude * cloud_texture(sc.height, sc.width, cl.octaves, cl.scale, _rng(sc, 0))
    return bg


def _blob_state(blob, k):
    """``(weight, spread)`` of a cloud at frame ``k``: linear fade-in, abrupt end."""
    if k < blob.start or k >= blob.stop:
        return 0.0, 1.0
    return min(1.0, (k - blob.start + 1) / max(blob.fade, 1)), 1.0


def render_frame(sc, k, include_target=True, _background=None):
    if not 0 <= k < sc.frame_count:
        raise IndexError(f"frame {k} outside [0, {sc.frame_count})")
    img = render_background(sc) if _background is None else _background.copy()
    for blob in sc.clutter.blobs:
        a, spread = _blob_state(blob, k)
        if a > 0:
            img -= a * blob.contrast * blob.profile(sc.height, sc.width, spread)
    c = sc.contrast(k) if include_target else 0.0
    if c > 0:
        x, y = sc.trajectory[k]
        img -= c * gaussian_spot(sc.height, sc.width, x, y, sc.radius(k))
    if sc.noise_sigma > 0:
        img += sc.noise_sigma * _rng(sc, 1, k).standard_normal(img.shape)
    # 8-bit sensor: frames survive a PGM round trip unchanged
    return np.clip(np.rint(img), 0.0, 255.0)


def truth_pixel(sc, k):
    if not sc.has_target or k < sc.onset_frame:
        return None
    x, y = sc.trajectory[k]
    return int(np.floor(y + 0.5)) * sc.width + int(np.floor(x + 0.5))


def range_at_frame(sc, k):
    if not 0 <= k < sc.frame_count:
        raise IndexError(f"frame {k} outside [0, {sc.frame_count})")
    return sc.range_m(k)


def generate_sequence(sc):
    bg = render_background(sc)
    frames = [render_frame(sc, k, _background=bg) for k in range(sc.frame_count)]
    truth = GroundTruth(sc.width, [truth_pixel(sc, k) for k in range(sc.frame_count)],
                        [range_at_frame(sc, k) for k in range(sc.frame_count)])
    return frames, truth


def make_trajectory(rng, width, height, frame_count, vx_max=0.25, vy_max=0.15, margin=6):
    """Slow drift ending inside the image: sideways either way, upward only."""
    vx = rng.uniform(-vx_max, vx_max)
    vy = -rng.uniform(0.0, vy_max)
    x_end = rng.uniform(margin, width - 1 - margin)
    y_end = rng.uniform(margin, height / 2)
    x0 = np.clip(x_end - vx * (frame_count - 1), margin, width - 1 - margin)
    y0 = np.clip(y_end - vy * (frame_count - 1), margin, height - 1 - margin)
    ks = np.arange(frame_count)
    xs = np.clip(x0 + vx * ks, 0, width - 1)
    ys = np.clip(y0 + vy * ks, 0, height - 1)
    return tuple(zip(xs.tolist(), ys.tolist()))


def make_blobs(rng, width, height, frame_count, count, size_range, contrast_range,
               life_range=(15, 40), length_range=(0.0, 0.0), max_tilt=0.3, avoid=None,
               avoid_radius=8.0):
    """Random fading clouds; lobed clouds lie within ``max_tilt`` radians of horizontal."""
    blobs = []
    while len(blobs) < count:
        x = rng.uniform(3, width - 4)
        y = rng.uniform(3, height - 4)
        if avoid is not None and np.hypot(x - avoid[0], y - avoid[1]) < avoid_radius:
            continue
        if life_range is None:
            start = int(rng.integers(0, max(frame_count // 2, 1)))
            life = frame_count - start
        else:
            life = int(rng.integers(*life_range))
            start = int(rng.integers(0, max(frame_count - life, 1)))
        blobs.append(CloudBlob(x=float(x), y=float(y), size=float(rng.uniform(*size_range)),
                               contrast=float(rng.uniform(*contrast_range)),
                               start=start, stop=start + life,
                               length=float(rng.uniform(*length_range)),
                               angle=float(rng.uniform(-max_tilt, max_tilt))))
    return tuple(blobs)


# (kind, noise_sigma, texture amplitude, blob count, contrast_rate)
_SUITE_PLAN = (
    ("clear", 1.0, 0.0, 0, 1.00),
    ("clear", 1.2, 3.0, 0, 0.80),
    ("clear", 1.5, 4.0, 0, 0.90),
    ("clear", 1.2, 2.0, 0, 0.70),
    ("textured", 1.5, 15.0, 0, 1.00),
    ("textured", 1.5, 20.0, 0, 0.90),
    ("textured", 2.0, 25.0, 0, 1.10),
    ("blob", 0.6, 8.0, 8, 0.90),
    ("blob", 0.6, 10.0, 10, 1.00),
    ("blob", 0.6, 12.0, 12, 0.80),
    ("blob", 0.6, 10.0, 10, 1.00),
    ("mixed", 0.6, 18.0, 4, 1.00),
    ("mixed", 0.6, 15.0, 5, 0.90),
    ("free", 1.2, 4.0, 0, 0.0),
    ("free", 0.6, 10.0, 10, 0.0),
)


def standard_suite(master_seed=2024, width=64, height=48, frame_count=150):
    """Fifteen encounters of graded difficulty, two of them target-free.

    Blob cases carry compact dark clouds of 2-4 px scale that fade in and
    vanish, the regime where single-pixel statistics false-alarm.
    """
    ss = np.random.SeedSequence(master_seed)
    children = ss.spawn(len(_SUITE_PLAN))
    suite = []
    for idx, ((kind, noise, amp, n_blobs, rate), child) in enumerate(zip(_SUITE_PLAN, children)):
        rng = np.random.default_rng(child)
        lo, hi = child.generate_state(2, np.uint32).tolist()
        seed = lo | (hi << 32)
        onset = int(rng.integers(50, 90))
        traj = make_trajectory(rng, width, height, frame_count)
        blobs = ()
        if n_blobs:
            # keep clouds clear of the target's early track
            avoid = traj[min(onset + 20, frame_count - 1)]
            blobs = make_blobs(rng, width, height, frame_count, n_blobs, size_range=(0.85, 1.0),
                               contrast_range=(15.0, 35.0), length_range=(1.9, 2.5), avoid=avoid)
        clutter = CloudTexture(octaves=2, amplitude=amp, scale=float(rng.uniform(24, 40)),
                               blobs=blobs)
        suite.append(EncounterScenario(
            name=f"case_{idx:02d}_{kind}", width=width, height=height, frame_count=frame_count,
            onset_frame=onset, trajectory=traj, seed=seed, has_target=kind != "free",
            background=float(rng.uniform(150, 190)), contrast_start=1.0,
            contrast_rate=rate, contrast_max=50.0, radius_start=0.35, radius_growth=0.005,
            radius_max=2.5, initial_range_m=float(rng.uniform(3800, 4400)),
            closing_speed_m_per_frame=float(rng.uniform(12, 18)), noise_sigma=noise,
            clutter=clutter))
    return suite


# ------------------------------------------------------------- disk layout
#
#   <suite>/suite.json                  case names in order
#   <suite>/<case>/scenario.json
#   <suite>/<case>/truth.csv
#   <suite>/<case>/frames/frame_0000.pgm ...


def frame_name(k):
    return f"frame_{k:04d}.pgm"


def write_case(sc, case_dir):
    """Render ``sc`` and write frames, ground truth and scenario under ``case_dir``."""
    case_dir = Path(case_dir)
    frame_dir = case_dir / "frames"
    frame_dir.mkdir(parents=True, exist_ok=True)
    frames, truth = generate_sequence(sc)
    for k, img in enumerate(frames):
        write_pgm(frame_dir / frame_name(k), img)
    truth.write_csv(case_dir / "truth.csv")
    (case_dir / "scenario.json").write_text(sc.to_json())
    return truth


def write_suite(scenarios, suite_dir):
    suite_dir = Path(suite_dir)
    suite_dir.mkdir(parents=True, exist_ok=True)
    for sc in scenarios:
        write_case(sc, suite_dir / sc.name)
    index = {"schema_version": SCHEMA_VERSION, "cases": [sc.name for sc in scenarios]}
    (suite_dir / "suite.json").write_text(json.dumps(index, indent=2) + "\n")


def frame_paths(seq_dir):
    """Ordered PGM paths of a sequence directory (``frames/`` subdirectory if present)."""
    seq_dir = Path(seq_dir)
    sub = seq_dir / "frames"
    root = sub if sub.is_dir() else seq_dir
    return sorted(root.glob("*.pgm"))


def read_frames(paths):
    """Load PGM frames, checking that every frame matches the first one's size.

    Raises ``ValueError`` naming the offending file.
    """
    frames, shape = [], None
    for p in paths:
        img = read_pgm(p)
        if shape is None:
            shape = img.shape
        elif img.shape != shape:
            raise ValueError(f"{p}: frame is {img.shape[1]}x{img.shape[0]}, "
                             f"expected {shape[1]}x{shape[0]}")
        frames.append(img)
    return frames
