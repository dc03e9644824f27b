"""Detection statistics, stopping rules and the stopping cost model.

Three rules threshold a statistic of the filter posterior:

* ``isd`` - total pixel mass, ``1 - P(out of image)`` (baseline)
* ``g1``  - largest single-pixel posterior
* ``g2``  - largest value of ``zeta``: each pixel's posterior minus the mass
  of its 8 neighbours, which penalises spatially extended responses

A rule declares at the first frame ``k > 0`` whose statistic reaches the
threshold. Argmax ties resolve to the lowest row-major pixel index.
"""
import csv
import json
from dataclasses import dataclass

import numpy as np

from . import kernels
from .hmm_filter import filter_step, init_belief
from .morphology import DEFAULT_SE, as_gray_image

RULES = ("isd", "g1", "g2")


def normalize_rule(rule):
    r = str(rule).strip().lower()
    if r not in RULES:
        raise ValueError(f"unknown rule {rule!r}; expected one of {', '.join(RULES)}")
    return r


def isd_statistic(belief):
    """Total pixel mass, ``1 - P(out of image)``.

    Summed over the pixels rather than taken as a complement so that it is
    never below the largest pixel entry, even in the last bit.
    """
    return float(belief.probs[:-1].sum())


def greedy1_statistic(belief):
    pix = belief.probs[:-1]
    i = int(np.argmax(pix))
    return float(pix[i]), i


def zeta(belief):
    """``(height, width)`` map of pixel mass minus its 8-neighbour mass (zero padded)."""
    grid = np.ascontiguousarray(belief.pixel_grid())
    return grid - kernels.neighbor_sum(grid)


def greedy2_statistic(belief):
    z = zeta(belief).ravel()
    i = int(np.argmax(z))
    return float(z[i]), i


def rule_statistic(belief, rule):
    """``(statistic, pixel)`` for any rule; ``isd`` reports the g1 argmax pixel."""
    rule = normalize_rule(rule)
    if rule == "g2":
        return greedy2_statistic(belief)
    g1, i = greedy1_statistic(belief)
    if rule == "g1":
        return g1, i
    return isd_statistic(belief), i


@dataclass(frozen=True)
class CostModel:
    """Delay, false-alarm and artefact penalties.

    ``c_bar1`` is the per-state delay penalty (last entry 0). Declaring at
    pixel ``i`` costs ``c2 * P(out of image) + w * (mass on the 8 neighbours
    of i)``.
    """

    width: int
    height: int
    c_bar1: np.ndarray
    c2: float
    w: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.c_bar1, dtype=np.float64)
        n = self.width * self.height
        if c.shape != (n + 1,):
            raise ValueError(f"c_bar1 must have length {n + 1}, got {c.shape}")
        if c[-1] != 0.0:
            raise ValueError("c_bar1 entry for the out-of-image state must be 0")
        if np.any(c[:-1] <= 0):
            raise ValueError("c_bar1 pixel entries must be positive")
        if not self.c2 > 0:
            raise ValueError(f"c2 must be positive, got {self.c2}")
        if not self.w >= 0:
            raise ValueError(f"w must be nonnegative, got {self.w}")
        object.__setattr__(self, "c_bar1", c)

    @classmethod
    def uniform(cls, width, height, delay=1.0, c2=9.0, w=0.0):
        c = np.full(width * height + 1, float(delay))
        c[-1] = 0.0
        return cls(width, height, c, float(c2), float(w))

    @property
    def c_m(self):
        return float(self.c_bar1[:-1].max())

    def continue_cost(self, probs):
        return float(self.c_bar1 @ probs)

    def stop_costs(self, probs):
        """Stopping cost for every pixel decision, row-major."""
        probs = np.asarray(probs, dtype=np.float64)
        costs = np.full(self.width * self.height, self.c2 * probs[-1])
        if self.w:
            grid = np.ascontiguousarray(probs[:-1].reshape(self.height, self.width))
            costs += self.w * kernels.neighbor_sum(grid).ravel()
        return costs


def greedy_region_member(belief, cm):
    """Lowest pixel ``i`` whose stopping cost is at most the continuing cost, else None."""
    probs = belief.probs if hasattr(belief, "probs") else np.asarray(belief)
    ok = np.flatnonzero(cm.stop_costs(probs) <= cm.continue_cost(probs))
    return int(ok[0]) if ok.size else None


def pfa_bound(cm):
    """Upper bound ``c_m / (c_m + c2)`` on the greedy rule's false-alarm probability."""
    return cm.c_m / (cm.c_m + cm.c2)


@dataclass(frozen=True)
class DetectionDecision:
    frame_index: int
    pixel: int
    statistic: float
    rule_id: str
    threshold: float
    width: int

    @property
    def pixel_xy(self):
        y, x = divmod(self.pixel, self.width)
        return x, y

    def to_record(self):
        return {"rule": self.rule_id, "frame": self.frame_index,
                "pixel_xy": list(self.pixel_xy), "statistic": self.statistic,
                "threshold": self.threshold}

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_record(), fh, indent=2)
            fh.write("\n")


def _frames_checked(frames):
    shape = None
    for idx, frame in enumerate(frames):
        img = as_gray_image(frame)
        if shape is None:
            shape = img.shape
        elif img.shape != shape:
            raise ValueError(f"frame {idx} has shape {img.shape}, expected {shape}")
        yield img


def run_detector(frames, rule, threshold, tm, se=DEFAULT_SE):
    """Filter ``frames`` and stop at the first ``k > 0`` with statistic >= threshold.

    ``k`` counts processed frames, so frame ``k`` is ``frames[k - 1]``.
    Returns a :class:`DetectionDecision` or None if the sequence ends first.
    """
    rule = normalize_rule(rule)
    belief = None
    for k, img in enumerate(_frames_checked(frames), start=1):
        if belief is None:
            belief = init_belief(img.shape[1], img.shape[0])
        belief, _ = filter_step(belief, img, tm, se)
        stat, pix = rule_statistic(belief, rule)
        if stat >= threshold:
            return DetectionDecision(k, pix, stat, rule, float(threshold), belief.width)
    if belief is None:
        raise ValueError("empty frame sequence")
    return None


@dataclass
class StatisticTrace:
    """Per-frame statistics of one filtered sequence (row ``k - 1`` is frame ``k``)."""

    width: int
    height: int
    isd: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    g1_pixel: np.ndarray
    g2_pixel: np.ndarray
    out_of_image: np.ndarray

    def __len__(self):
        return len(self.isd)

    def statistic(self, rule):
        return getattr(self, normalize_rule(rule))

    def pixels(self, rule):
        rule = normalize_rule(rule)
        return self.g2_pixel if rule == "g2" else self.g1_pixel

    def first_crossing(self, rule, threshold):
        """Same decision :func:`run_detector` would make, read off the trace."""
        rule = normalize_rule(rule)
        stats = self.statistic(rule)
        hits = np.flatnonzero(stats >= threshold)
        if not hits.size:
            return None
        j = int(hits[0])
        return DetectionDecision(j + 1, int(self.pixels(rule)[j]), float(stats[j]), rule,
                                 float(threshold), self.width)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["frame", "isd", "g1", "g2", "out_of_image_mass"])
            for j in range(len(self)):
                wr.writerow([j + 1, repr(float(self.isd[j])), repr(float(self.g1[j])),
                             repr(float(self.g2[j])), repr(float(self.out_of_image[j]))])


def trace_statistics(frames, tm, se=DEFAULT_SE):
    """Run the filter over every frame and record all three statistics."""
    rows = []
    belief = None
    for img in _frames_checked(frames):
        if belief is None:
            belief = init_belief(img.shape[1], img.shape[0])
        belief, _ = filter_step(belief, img, tm, se)
        g1, p1 = greedy1_statistic(belief)
        g2, p2 = greedy2_statistic(belief)
        rows.append((isd_statistic(belief), g1, g2, p1, p2, belief.out_of_image))
    if belief is None:
        raise ValueError("empty frame sequence")
    cols = list(zip(*rows))
    return StatisticTrace(
        belief.width, belief.height,
        isd=np.array(cols[0]), g1=np.array(cols[1]), g2=np.array(cols[2]),
        g1_pixel=np.array(cols[3], dtype=np.int64), g2_pixel=np.array(cols[4], dtype=np.int64),
        out_of_image=np.array(cols[5]))
