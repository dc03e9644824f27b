"""Zero-false-alarm evaluation over a suite of encounters.

Each case is filtered once and its per-frame statistics recorded; thresholds
and declarations are then read off those traces. A declaration at filter
step ``k`` refers to sequence frame ``k - 1``.
"""
import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .detection import RULES, normalize_rule, run_detector, trace_statistics
from .hmm_filter import TransitionModel
from .imageio import PGMError
from .morphology import DEFAULT_SE
from .simulator import (EncounterScenario, GroundTruth, frame_paths, generate_sequence,
                        read_frames)

DEFAULT_RADIUS = 2


@dataclass
class Case:
    name: str
    frames: list
    truth: object          # simulator.GroundTruth
    trace: object = None   # detection.StatisticTrace, filled by record_traces

    @property
    def has_target(self):
        return any(p is not None for p in self.truth.pixels)


def cases_from_scenarios(scenarios):
    out = []
    for sc in scenarios:
        frames, truth = generate_sequence(sc)
        out.append(Case(sc.name, frames, truth))
    return out


class IncompleteSuiteError(OSError):
    """A suite directory is missing files or holds unreadable ones."""


def load_case(case_dir):
    """Read one case written by :func:`simulator.write_case`."""
    case_dir = Path(case_dir)
    try:
        sc = EncounterScenario.from_json((case_dir / "scenario.json").read_text())
    except FileNotFoundError:
        raise IncompleteSuiteError(f"{case_dir}: missing scenario.json") from None
    if not (case_dir / "truth.csv").is_file():
        raise IncompleteSuiteError(f"{case_dir}: missing truth.csv")
    truth = GroundTruth.read_csv(case_dir / "truth.csv", sc.width)
    paths = frame_paths(case_dir)
    if len(paths) != sc.frame_count or len(truth.pixels) != sc.frame_count:
        raise IncompleteSuiteError(f"{case_dir}: expected {sc.frame_count} frames and truth rows, "
                                   f"found {len(paths)} frames and {len(truth.pixels)} rows")
    try:
        frames = read_frames(paths)
    except (PGMError, ValueError) as exc:
        raise IncompleteSuiteError(str(exc)) from None
    if frames[0].shape != (sc.height, sc.width):
        raise IncompleteSuiteError(f"{case_dir}: frames do not match the scenario size")
    return Case(sc.name, frames, truth)


def load_suite(suite_dir):
    suite_dir = Path(suite_dir)
    try:
        index = json.loads((suite_dir / "suite.json").read_text())
    except FileNotFoundError:
        raise IncompleteSuiteError(f"{suite_dir}: missing suite.json") from None
    except json.JSONDecodeError as exc:
        raise IncompleteSuiteError(f"{suite_dir}/suite.json: {exc.msg}") from None
    names = index.get("cases", [])
    if not names:
        raise IncompleteSuiteError(f"{suite_dir}: suite.json lists no cases")
    return [load_case(suite_dir / n) for n in names]


def record_traces(cases, tm, se=DEFAULT_SE, workers=1):
    def run(case):
        case.trace = trace_statistics(case.frames, tm, se)
        return case
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, cases))
    else:
        for c in cases:
            run(c)
    return cases


def _chebyshev_ok(pixel, truth_pixel, width, radius):
    if truth_pixel is None:
        return False
    y0, x0 = divmod(truth_pixel, width)
    y1, x1 = divmod(pixel, width)
    return max(abs(x0 - x1), abs(y0 - y1)) <= radius


def classify_declaration(decision, truth, radius=DEFAULT_RADIUS):
    """``"true-detection"`` if the target is present at the declared frame and
    the declared pixel is within Chebyshev ``radius`` of it, else ``"false-alarm"``."""
    j = decision.frame_index - 1
    if not 0 <= j < len(truth.pixels):
        raise IndexError(f"declaration frame {decision.frame_index} outside the sequence")
    ok = _chebyshev_ok(decision.pixel, truth.pixels[j], truth.width, radius)
    return "true-detection" if ok else "false-alarm"


def true_sample_mask(trace, truth, rule, radius=DEFAULT_RADIUS):
    """Per-frame flag: would a declaration at this frame be a true detection?"""
    pix = trace.pixels(rule)
    return np.array([_chebyshev_ok(int(p), t, truth.width, radius)
                     for p, t in zip(pix, truth.pixels)], dtype=bool)


def _first_crossing_safe(stats, labels, h):
    """True when the first sample >= h (if any) is a true detection."""
    prefix = np.maximum.accumulate(stats)
    idx = np.searchsorted(prefix, h, side="left")
    return idx >= len(stats) or bool(labels[idx])


def zfa_threshold(cases, rule, radius=DEFAULT_RADIUS, mode="first_crossing"):
    """Lowest threshold at which no case makes a false declaration.

    ``mode="first_crossing"`` honours stopping semantics: a detector stops at
    its first crossing, so false-alarm samples after a true first crossing do
    not count. ``mode="supremum"`` instead returns the next float above every
    false-alarm sample in every trace, which is never lower.
    """
    rule = normalize_rule(rule)
    if not cases:
        raise ValueError("empty suite")
    series = []
    for c in cases:
        if c.trace is None:
            raise ValueError(f"case {c.name} has no recorded trace")
        stats = np.asarray(c.trace.statistic(rule), dtype=np.float64)
        series.append((stats, true_sample_mask(c.trace, c.truth, rule, radius)))

    false_vals = np.concatenate([s[~m] for s, m in series])
    floor = np.nextafter(false_vals.max(), np.inf) if false_vals.size else -np.inf
    if mode == "supremum":
        return float(floor)
    if mode != "first_crossing":
        raise ValueError(f"unknown ZFA mode {mode!r}")

    true_vals = np.concatenate([s[m] for s, m in series])
    cands = np.unique(np.concatenate([np.nextafter(false_vals, np.inf), true_vals]))
    cands = cands[cands <= floor]
    for h in cands:
        if all(_first_crossing_safe(s, m, h) for s, m in series):
            return float(h)
    return float(floor)


@dataclass
class CaseResult:
    case: str
    has_target: bool
    frame: int = None            # filter step k of the declaration
    pixel_xy: tuple = None
    statistic: float = None
    range_m: float = None
    true_detection: bool = False

    @property
    def declared(self):
        return self.frame is not None


@dataclass
class RuleSummary:
    rule: str
    threshold: float
    cases: list = field(default_factory=list)

    @property
    def detected_ranges(self):
        return [c.range_m for c in self.cases if c.true_detection]

    @property
    def false_alarms(self):
        return sum(1 for c in self.cases if c.declared and not c.true_detection)

    @property
    def misses(self):
        return sum(1 for c in self.cases if c.has_target and not c.true_detection)

    @property
    def mean_range(self):
        r = self.detected_ranges
        # exact summation keeps the mean independent of case order
        return math.fsum(r) / len(r) if r else None

    @property
    def standard_error(self):
        r = np.asarray(sorted(self.detected_ranges))
        if r.size < 2:
            return None
        return float(r.std(ddof=1) / math.sqrt(r.size))


@dataclass
class EvaluationReport:
    rules: list

    def summary(self, rule):
        rule = normalize_rule(rule)
        for s in self.rules:
            if s.rule == rule:
                return s
        raise KeyError(rule)

    def to_dict(self):
        out = {"schema_version": 1, "rules": []}
        for s in self.rules:
            out["rules"].append({
                "rule": s.rule,
                "zfa_threshold": s.threshold,
                "mean_range_m": s.mean_range,
                "standard_error_m": s.standard_error,
                "detected": len(s.detected_ranges),
                "misses": s.misses,
                "false_alarms": s.false_alarms,
                "cases": [{
                    "case": c.case, "has_target": c.has_target, "frame": c.frame,
                    "pixel_xy": None if c.pixel_xy is None else list(c.pixel_xy),
                    "statistic": c.statistic, "range_m": c.range_m,
                    "true_detection": c.true_detection,
                } for c in sorted(s.cases, key=lambda c: c.case)],
            })
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def summary_csv(self):
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["rule", "zfa_threshold", "mean_range_m", "standard_error_m",
                     "detected", "misses", "false_alarms"])
        for s in self.rules:
            wr.writerow([s.rule, repr(s.threshold),
                         "" if s.mean_range is None else repr(s.mean_range),
                         "" if s.standard_error is None else repr(s.standard_error),
                         len(s.detected_ranges), s.misses, s.false_alarms])
        return buf.getvalue()


def evaluate_rule(cases, rule, threshold, radius=DEFAULT_RADIUS):
    rule = normalize_rule(rule)
    summary = RuleSummary(rule, float(threshold))
    for c in cases:
        res = CaseResult(c.name, c.has_target)
        dec = c.trace.first_crossing(rule, threshold)
        if dec is not None:
            j = dec.frame_index - 1
            res.frame = dec.frame_index
            res.pixel_xy = dec.pixel_xy
            res.statistic = dec.statistic
            res.range_m = float(c.truth.ranges_m[j])
            res.true_detection = classify_declaration(dec, c.truth, radius) == "true-detection"
        summary.cases.append(res)
    return summary


def evaluate_suite(cases, rules=RULES, tm=None, se=DEFAULT_SE, radius=DEFAULT_RADIUS,
                   mode="first_crossing", workers=1):
    """ZFA threshold per rule, then each rule's declarations at that threshold."""
    if tm is None:
        tm = TransitionModel.from_weights()
    pending = [c for c in cases if c.trace is None]
    if pending:
        record_traces(pending, tm, se, workers)
    summaries = []
    for rule in rules:
        h = zfa_threshold(cases, rule, radius, mode)
        summaries.append(evaluate_rule(cases, rule, h, radius))
    return EvaluationReport(summaries)


def replay_check(cases, report, tm, se=DEFAULT_SE, radius=DEFAULT_RADIUS):
    """Rerun the streaming detector at each reported threshold.

    Returns mismatches as ``(rule, case, message)``: a declaration that
    differs from the report, or any false alarm.
    """
    by_name = {c.name: c for c in cases}
    problems = []
    for s in report.rules:
        for res in s.cases:
            case = by_name[res.case]
            dec = run_detector(case.frames, s.rule, s.threshold, tm, se)
            frame = None if dec is None else dec.frame_index
            if frame != res.frame:
                problems.append((s.rule, res.case, f"declared at {frame}, report says {res.frame}"))
            elif (dec is not None
                  and classify_declaration(dec, case.truth, radius) != "true-detection"):
                problems.append((s.rule, res.case, f"false alarm at frame {frame}"))
    return problems


def plot_report(report, path):
    """Mean detection range per rule with standard-error bars, as a reproducible SVG."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "hmmdetect"
    names = [s.rule.upper() for s in report.rules]
    means = [s.mean_range or 0.0 for s in report.rules]
    errs = [s.standard_error or 0.0 for s in report.rules]
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    ax.bar(names, means, yerr=errs, capsize=6, color=["#999999", "#4477aa", "#cc6677"][:len(names)])
    ax.set_ylabel("mean detection range (m)")
    ax.set_title("Zero-false-alarm detection range")
    lo = min((m - e for m, e in zip(means, errs) if m), default=0.0)
    ax.set_ylim(max(0.0, lo - 300.0), max(means) + max(errs) + 200.0)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
