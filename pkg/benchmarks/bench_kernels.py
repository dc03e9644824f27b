"""Compare the numba and numpy kernel paths on a 1024x768 frame.

    python benchmarks/bench_kernels.py [--width 1024] [--height 768] [--repeat 20]

Kernel rows time ``np_*`` against ``nb_*`` in this process. The
``filter_step`` rows run a child interpreter per backend because the
backend is fixed at import time by ``HMMDETECT_DISABLE_NUMBA``.
"""
import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from hmmdetect import kernels
from hmmdetect._accel import HAS_NUMBA
from hmmdetect.morphology import DEFAULT_SE

_STEP_SNIPPET = r"""
import json, sys, timeit
import numpy as np
from hmmdetect import kernels
from hmmdetect.hmm_filter import TransitionModel, filter_step, init_belief
w, h, repeat = map(int, sys.argv[1:4])
rng = np.random.default_rng(0)
frame = 170.0 + rng.normal(0, 2, (h, w))
tm = TransitionModel.from_weights(p_death=0.05, boundary="exit")
b = init_belief(w, h)
b, _ = filter_step(b, frame, tm)
t = min(timeit.repeat(lambda: filter_step(b, frame, tm), number=1, repeat=repeat))
print(json.dumps({"backend": kernels.BACKEND, "seconds": t}))
"""


def best(fn, repeat):
    fn()  # warm-up (compiles the numba path)
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_rows(width, height, repeat):
    rng = np.random.default_rng(0)
    img = rng.uniform(0, 255, (height, width))
    prob = rng.random((height, width))
    dx, dy = DEFAULT_SE.arrays()
    pdx = np.array([0, -1, 1, -1, 0, 1], dtype=np.int64)
    pdy = np.array([0, 0, 0, -1, -1, -1], dtype=np.int64)
    pw = np.full(6, 1.0 / 6)
    cases = {
        "dilate": (lambda m: m.np_dilate, lambda m: m.nb_dilate, (img, dx, dy)),
        "erode": (lambda m: m.np_erode, lambda m: m.nb_erode, (img, dx, dy)),
        "patch_gather": (lambda m: m.np_patch_gather, lambda m: m.nb_patch_gather,
                         (prob, pw, pdx, pdy)),
        "neighbor_sum": (lambda m: m.np_neighbor_sum, lambda m: m.nb_neighbor_sum, (prob,)),
    }
    rows = []
    for name, (get_np, get_nb, args) in cases.items():
        t_np = best(lambda: get_np(kernels)(*args), repeat)
        t_nb = best(lambda: get_nb(kernels)(*args), repeat) if HAS_NUMBA else float("nan")
        rows.append((name, t_np, t_nb))
    return rows


def step_time(width, height, repeat, disable_numba):
    env = dict(os.environ)
    env["HMMDETECT_DISABLE_NUMBA"] = "1" if disable_numba else "0"
    out = subprocess.run([sys.executable, "-c", _STEP_SNIPPET, str(width), str(height),
                          str(repeat)], env=env, check=True, capture_output=True, text=True)
    return json.loads(out.stdout.strip().splitlines()[-1])["seconds"]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--width", type=int, default=1024)
    ap.add_argument("--height", type=int, default=768)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)

    print(f"{'kernel':<14}{'numpy ms':>10}{'numba ms':>10}{'speedup':>9}")
    for name, t_np, t_nb in kernel_rows(args.width, args.height, args.repeat):
        print(f"{name:<14}{1e3 * t_np:>10.2f}{1e3 * t_nb:>10.2f}{t_np / t_nb:>8.1f}x")
    t_np = step_time(args.width, args.height, args.repeat, True)
    t_nb = step_time(args.width, args.height, args.repeat, False) if HAS_NUMBA else float("nan")
    print(f"{'filter_step':<14}{1e3 * t_np:>10.2f}{1e3 * t_nb:>10.2f}{t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
