import dataclasses
import json

import numpy as np
import pytest

from hmmdetect import evaluation, simulator
from hmmdetect.detection import DetectionDecision, StatisticTrace
from hmmdetect.evaluation import (Case, classify_declaration, evaluate_rule, evaluate_suite,
                                  replay_check, zfa_threshold)
from hmmdetect.simulator import GroundTruth


def truth_line(n=10, onset=4, width=10):
    pixels = [None] * onset + [3 * width + 5] * (n - onset)
    return GroundTruth(width, pixels, [1000.0 - 10 * k for k in range(n)])


def synthetic_case(name, stats, pixels, truth):
    stats = np.asarray(stats, dtype=float)
    pix = np.asarray(pixels, dtype=np.int64)
    trace = StatisticTrace(truth.width, 8, isd=stats, g1=stats, g2=stats, g1_pixel=pix,
                           g2_pixel=pix, out_of_image=1 - stats)
    return Case(name, [], truth, trace)


def test_classify_examples():
    truth = truth_line()
    on = 3 * 10 + 5
    assert classify_declaration(DetectionDecision(3, on, 1, "g1", 0, 10), truth) == "false-alarm"
    assert classify_declaration(DetectionDecision(6, on, 1, "g1", 0, 10), truth) == \
        "true-detection"
    near = DetectionDecision(6, on + 2, 1, "g1", 0, 10)
    far = DetectionDecision(6, on + 3, 1, "g1", 0, 10)
    diag = DetectionDecision(6, on - 2 * 10 - 2, 1, "g1", 0, 10)
    assert classify_declaration(near, truth) == "true-detection"
    assert classify_declaration(far, truth) == "false-alarm"
    assert classify_declaration(diag, truth) == "true-detection"
    with pytest.raises(IndexError):
        classify_declaration(DetectionDecision(11, on, 1, "g1", 0, 10), truth)


def test_zfa_single_clear_case_is_next_float_above_false_peak():
    truth = truth_line()
    on = 35
    stats = [0.1, 0.3, 0.2, 0.25, 0.28, 0.5, 0.6, 0.7, 0.8, 0.9]
    case = synthetic_case("c", stats, [on] * 10, truth)
    # trace rows 0-3 are the pre-onset frames
    h = zfa_threshold([case], "g1", mode="supremum")
    assert h == np.nextafter(0.3, np.inf)
    assert zfa_threshold([case], "g1") == h


def test_zfa_first_crossing_ignores_samples_after_a_true_stop():
    truth = truth_line()
    on = 35
    # a wrong-pixel spike after a true detection never gets acted on
    stats = [0.1, 0.1, 0.1, 0.1, 0.1, 0.5, 0.9, 0.2, 0.2, 0.2]
    pix = [on] * 6 + [0] + [on] * 3
    case = synthetic_case("c", stats, pix, truth)
    assert zfa_threshold([case], "g1", mode="supremum") == np.nextafter(0.9, np.inf)
    h = zfa_threshold([case], "g1")
    assert h == np.nextafter(0.1, np.inf)
    dec = case.trace.first_crossing("g1", h)
    assert dec.frame_index == 6 and classify_declaration(dec, truth) == "true-detection"


def test_zfa_target_free_case_counts_every_frame():
    free = synthetic_case("f", [0.4] * 10, [0] * 10, GroundTruth(10, [None] * 10, [1.0] * 10))
    assert zfa_threshold([free], "g2") == np.nextafter(0.4, np.inf)
    with pytest.raises(ValueError):
        zfa_threshold([], "g2")
    with pytest.raises(ValueError):
        zfa_threshold([free], "g2", mode="median")


def test_report_statistics():
    truth = truth_line()
    cases = [synthetic_case(f"c{i}", [0.0] * 4 + [0.1 * i + 0.5] * 6, [35] * 10, truth)
             for i in range(3)]
    summary = evaluate_rule(cases, "g1", 0.5)
    assert summary.detected_ranges == [960.0] * 3
    assert summary.mean_range == 960.0 and summary.standard_error == 0.0
    summary = evaluate_rule(cases, "g1", 0.65)
    assert summary.misses == 2 and summary.mean_range == 960.0
    assert summary.standard_error is None
    nothing = evaluate_rule(cases, "g1", 2.0)
    assert nothing.mean_range is None and nothing.misses == 3 and nothing.false_alarms == 0


# ------------------------------------------------------------ standard suite


def test_suite_zero_false_alarms(suite_report):
    for s in suite_report.rules:
        assert s.false_alarms == 0
        for c in s.cases:
            if not c.has_target:
                assert not c.declared


def test_supremum_mode_never_lower(suite_cases):
    for rule in ("isd", "g1", "g2"):
        assert zfa_threshold(suite_cases, rule, mode="supremum") >= zfa_threshold(suite_cases, rule)


def test_replay_check_passes(suite_cases, suite_report, pipeline_config):
    assert replay_check(suite_cases, suite_report, pipeline_config.transition_model()) == []


def test_declaration_frames_monotone_in_threshold(suite_cases):
    for rule in ("isd", "g1", "g2"):
        h0 = zfa_threshold(suite_cases, rule)
        prev = None
        for h in np.linspace(h0, 1.0, 15):
            frames = [np.inf if r.frame is None else r.frame
                      for r in evaluate_rule(suite_cases, rule, h).cases]
            if prev is not None:
                assert all(a >= b for a, b in zip(frames, prev))
            prev = frames


def test_permutation_invariance(suite_cases, suite_report):
    shuffled = [suite_cases[i] for i in np.random.default_rng(3).permutation(len(suite_cases))]
    again = evaluate_suite(shuffled)
    assert again.to_json() == suite_report.to_json()


def test_report_serialisation(suite_report):
    doc = json.loads(suite_report.to_json())
    assert [r["rule"] for r in doc["rules"]] == ["isd", "g1", "g2"]
    assert all(len(r["cases"]) == 15 for r in doc["rules"])
    rows = suite_report.summary_csv().splitlines()
    assert rows[0].startswith("rule,zfa_threshold") and len(rows) == 4


def test_clear_suite_detects_everything(standard_scenarios, pipeline_config):
    cases = evaluation.cases_from_scenarios(standard_scenarios[:4])
    rep = evaluate_suite(cases, tm=pipeline_config.transition_model())
    frames = {}
    for s in rep.rules:
        assert s.misses == 0 and s.false_alarms == 0
        frames[s.rule] = np.array([c.frame for c in s.cases])
    assert np.all(np.abs(frames["g1"] - frames["g2"]) <= 1)
    # the baseline trails by a few frames even without clutter
    assert np.all(frames["isd"] >= frames["g1"])


@pytest.mark.parametrize("idx", [8, 14])
def test_isd_threshold_grows_with_cloud_contrast(standard_scenarios, pipeline_config, idx):
    base = standard_scenarios[idx]
    tm = pipeline_config.transition_model()
    last = -np.inf
    for scale in (0.0, 0.5, 1.0, 1.5):
        blobs = tuple(dataclasses.replace(b, contrast=b.contrast * scale)
                      for b in base.clutter.blobs)
        sc = dataclasses.replace(base, clutter=dataclasses.replace(base.clutter, blobs=blobs))
        cases = evaluation.record_traces(evaluation.cases_from_scenarios([sc]), tm)
        h = zfa_threshold(cases, "isd")
        assert h >= last
        last = h


def test_disk_suite_roundtrip(tmp_path, standard_scenarios):
    simulator.write_suite(standard_scenarios[:2], tmp_path / "suite")
    cases = evaluation.load_suite(tmp_path / "suite")
    assert [c.name for c in cases] == [sc.name for sc in standard_scenarios[:2]]
    (tmp_path / "suite" / standard_scenarios[1].name / "truth.csv").unlink()
    with pytest.raises(evaluation.IncompleteSuiteError):
        evaluation.load_suite(tmp_path / "suite")
    with pytest.raises(evaluation.IncompleteSuiteError):
        evaluation.load_suite(tmp_path / "nowhere")


def test_plot_is_reproducible(tmp_path, suite_report):
    pytest.importorskip("matplotlib")
    evaluation.plot_report(suite_report, tmp_path / "a.svg")
    evaluation.plot_report(suite_report, tmp_path / "b.svg")
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()
