"""Compiled kernels vs the numpy fallback, per kernel and for whole trials.

    python benchmarks/bench_kernels.py [--trials N]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from helibo import tracker as trk
from helibo._kernels import _pykernels as py

try:
    from helibo._kernels import _ckernels as ck
except ImportError:
    ck = None

TRIAL_SNIPPET = """
import time
from helibo.trials import evaluate, TrialConfig
from helibo.detector import AugParams, EnvCondition
from helibo._kernels import BACKEND
t = time.perf_counter()
r = evaluate(AugParams(0.62, 0.52), EnvCondition.CLEAR_DAY, TrialConfig(trials_per_eval={n}))
steps = sum(o.steps_used for o in r.outcomes)
dt = time.perf_counter() - t
print(BACKEND, dt, steps)
"""


def bench_kernel(mod, number=20000):
    rng = np.random.default_rng(0)
    x = np.concatenate([[0.5, 0.5, 0.01, 1.0], rng.normal(0, 1e-3, 3)])
    P = trk.P0.copy()
    z = x[:4] + 1e-3
    a = np.array([[0.5, 0.5, 0.1, 0.1]])
    b = rng.uniform(0.2, 0.6, (3, 4))
    out = {}
    out["kf_predict"] = timeit.timeit(lambda: mod.kf_predict(x.copy(), P.copy(), trk.Q),
                                      number=number) / number
    out["kf_update"] = timeit.timeit(lambda: mod.kf_update(x.copy(), P.copy(), z, trk.R),
                                     number=number) / number
    out["iou_matrix"] = timeit.timeit(lambda: mod.iou_matrix(a, b), number=number) / number
    return out


def bench_trials(n, pure):
    env = dict(os.environ)
    if pure:
        env["HELIBO_PURE_PYTHON"] = "1"
    else:
        env.pop("HELIBO_PURE_PYTHON", None)
    res = subprocess.run([sys.executable, "-c", TRIAL_SNIPPET.format(n=n)], env=env,
                         capture_output=True, text=True, check=True)
    backend, dt, steps = res.stdout.split()
    return backend, float(dt), int(steps)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=10)
    args = ap.parse_args()

    pyt = bench_kernel(py)
    ct = bench_kernel(ck) if ck is not None else None
    print(f"{'kernel':<12}{'numpy us':>12}{'cython us':>12}{'speedup':>10}")
    for k, v in pyt.items():
        if ct is None:
            print(f"{k:<12}{v * 1e6:>12.2f}{'n/a':>12}")
        else:
            print(f"{k:<12}{v * 1e6:>12.2f}{ct[k] * 1e6:>12.2f}{v / ct[k]:>10.1f}x")

    print()
    rows = [bench_trials(args.trials, pure=True)]
    if ck is not None:
        rows.append(bench_trials(args.trials, pure=False))
    for backend, dt, steps in rows:
        print(f"{backend:<8} {args.trials} trials, {steps} steps: {dt:.2f} s "
              f"({dt / steps * 1e6:.1f} us/step)")


if __name__ == "__main__":
    main()
