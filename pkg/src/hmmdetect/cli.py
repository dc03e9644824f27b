"""``hmmdetect`` command line.

Subcommands::

    hmmdetect simulate [--out DIR]            write the 15-case synthetic suite
    hmmdetect detect SEQUENCE_DIR [--out DIR] run the detector on PGM frames
    hmmdetect evaluate SUITE_DIR [--out DIR]  ZFA thresholds and detection ranges
    hmmdetect oracle [--out DIR]              small-state optimal stopping checks

Shared flags ``--config``, ``--out``, ``--seed``, ``--workers`` and
``--rules`` can also be given as ``HMMDETECT_CONFIG``, ``HMMDETECT_OUT``,
``HMMDETECT_SEED``, ``HMMDETECT_WORKERS`` and ``HMMDETECT_RULES``; flags win
over the environment, which wins over the config file.
"""
import argparse
import json
import os
import sys
from pathlib import Path

from . import detection, evaluation, oracle, simulator
from .config import ConfigError, load_config

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_NO_DETECTION = 4
EXIT_CHECK_FAILED = 5
EXIT_NOT_CONVERGED = 6

ENV_PREFIX = "HMMDETECT_"


class _Fail(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed {text} is not an unsigned 64-bit integer")
    return v


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (defaults embedded)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", help="master seed override (unsigned 64-bit)")
    common.add_argument("--workers", help="worker threads for per-case parallelism")
    common.add_argument("--rules", help="comma-separated subset of isd,g1,g2")

    p = argparse.ArgumentParser(prog="hmmdetect", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="write the synthetic suite")
    d = sub.add_parser("detect", parents=[common], help="detect in one PGM sequence")
    d.add_argument("sequence", help="directory of ordered PGM frames (or a case dir)")
    e = sub.add_parser("evaluate", parents=[common], help="evaluate rules on a suite")
    e.add_argument("suite", help="directory written by 'simulate'")
    e.add_argument("--plot", action="store_true", help="also write range_summary.svg")
    sub.add_parser("oracle", parents=[common], help="run the small-state optimal stopping checks")
    return p


def _setting(args, name):
    val = getattr(args, name, None)
    if val is None:
        val = os.environ.get(ENV_PREFIX + name.upper()) or None
    return val


def _resolve(args):
    """Config with flag and environment overrides applied."""
    cfg = load_config(_setting(args, "config"))
    seed = _setting(args, "seed")
    if seed is not None:
        try:
            seed = _u64(str(seed))
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise ConfigError("seed", str(exc)) from None
        cfg.suite.master_seed = seed
        cfg.oracle.seed = seed
    workers = _setting(args, "workers")
    if workers is not None:
        try:
            cfg.workers = _positive(str(workers))
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise ConfigError("workers", str(exc)) from None
    rules = _setting(args, "rules")
    if rules is not None:
        cfg.detection.rules = [r for r in str(rules).split(",") if r.strip()]
    out = _setting(args, "out")
    if out is not None:
        cfg.out = out
    return cfg.validate()


def _write(path, text):
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    except OSError as exc:
        raise _Fail(EXIT_IO, f"cannot write {path}: {exc.strerror or exc}") from None


# ---------------------------------------------------------------- commands


def cmd_simulate(cfg):
    s = cfg.suite
    scenarios = simulator.standard_suite(s.master_seed, s.width, s.height, s.frame_count)
    out = Path(cfg.out)
    try:
        simulator.write_suite(scenarios, out)
    except OSError as exc:
        raise _Fail(EXIT_IO, f"cannot write suite to {out}: {exc.strerror or exc}") from None
    print(f"wrote {len(scenarios)} cases to {out}")
    return EXIT_OK


def cmd_detect(cfg, sequence):
    seq = Path(sequence)
    if not seq.is_dir():
        raise _Fail(EXIT_IO, f"{seq}: not a directory")
    paths = simulator.frame_paths(seq)
    if not paths:
        raise _Fail(EXIT_IO, f"{seq}: no PGM frames found")
    try:
        frames = simulator.read_frames(paths)
    except (OSError, ValueError) as exc:
        raise _Fail(EXIT_IO, str(exc)) from None
    tm, se = cfg.transition_model(), cfg.structuring_element()
    trace = detection.trace_statistics(frames, tm, se)
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        trace.write_csv(out / "trace.csv")
    except OSError as exc:
        raise _Fail(EXIT_IO, f"cannot write to {out}: {exc.strerror or exc}") from None
    declared = 0
    for rule in cfg.rules():
        target = out / f"decision_{rule}.json"
        dec = trace.first_crossing(rule, cfg.threshold(rule))
        if dec is None:
            if target.exists():
                target.unlink()
            print(f"{rule}: no detection at threshold {cfg.threshold(rule)!r}")
            continue
        declared += 1
        _write(target, json.dumps(dec.to_record(), indent=2) + "\n")
        x, y = dec.pixel_xy
        print(f"{rule}: declared at frame {dec.frame_index}, pixel ({x}, {y}), "
              f"statistic {dec.statistic:.6g}")
    return EXIT_OK if declared else EXIT_NO_DETECTION


def cmd_evaluate(cfg, suite, plot=False):
    try:
        cases = evaluation.load_suite(suite)
    except evaluation.IncompleteSuiteError as exc:
        raise _Fail(EXIT_IO, f"incomplete suite: {exc}") from None
    tm, se = cfg.transition_model(), cfg.structuring_element()
    report = evaluation.evaluate_suite(cases, cfg.rules(), tm, se, cfg.evaluation.radius,
                                       cfg.evaluation.zfa_mode, cfg.workers)
    out = Path(cfg.out)
    _write(out / "report.json", report.to_json())
    _write(out / "summary.csv", report.summary_csv())
    if plot or cfg.evaluation.plot:
        try:
            evaluation.plot_report(report, out / "range_summary.svg")
        except ImportError:
            print("matplotlib not installed; skipping range_summary.svg", file=sys.stderr)
    for s in report.rules:
        mean = "n/a" if s.mean_range is None else f"{s.mean_range:.1f} m"
        print(f"{s.rule}: threshold {s.threshold:.6g}, mean range {mean}, "
              f"detected {len(s.detected_ranges)}, false alarms {s.false_alarms}")
    return EXIT_OK


def cmd_oracle(cfg):
    o, c = cfg.oracle, cfg.cost
    model = oracle.default_model(o.width, o.height, o.alphabet_size, o.correct, c.c2, c.delay,
                                 c.w, tm=cfg.oracle_transition_model())
    rep = oracle.run_checks(model, resolution=o.resolution, tol=o.tol, max_sweeps=o.max_sweeps,
                            trials=o.trials, seed=o.seed, concavity_pairs=o.concavity_pairs,
                            policy_trials=o.policy_trials,
                            small=o.resolution < oracle.MIN_RESOLUTION)
    out = Path(cfg.out)
    _write(out / "oracle.json", rep.to_json())
    _write(out / "value_table.json", json.dumps(rep.solution.to_dict(), sort_keys=True) + "\n")
    _write(out / "value_table.csv", rep.solution.to_csv())
    d = rep.to_dict()
    print(f"grid points {d['grid_points']}, sweeps {d['sweeps']}, "
          f"violations {d['violations']}, PFA {rep.pfa.pfa:.4f} +- {rep.pfa.standard_error:.4f} "
          f"(bound {rep.pfa.bound:.4f})")
    if not rep.solution.converged:
        print("value iteration did not converge within max_sweeps", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_CHECK_FAILED if rep.violations else EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve(args)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "detect":
            return cmd_detect(cfg, args.sequence)
        if args.command == "evaluate":
            return cmd_evaluate(cfg, args.suite, args.plot)
        return cmd_oracle(cfg)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except _Fail as exc:
        print(str(exc), file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
