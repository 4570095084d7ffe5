"""Compare the compiled and pure-Python Mittag-Leffler kernels.

Each case is timed on both backends (best of ``--repeat`` runs) and the
largest relative disagreement between them is reported.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--size 20000]
"""
import argparse
import time

import numpy as np

from fradic import mlf


def cases(size):
    rng = np.random.default_rng(0)
    yield "series, |z| < 20", 0.75, 0.75, -20.0 * rng.random(size)
    yield "double-double band", 0.6, 0.6, -(10.0 + 30.0 * rng.random(size // 4)) ** 0.6
    yield "asymptotic, z < -200", 0.75, 0.75, -200.0 - 1e4 * rng.random(size)
    lam = (np.arange(1, 33) * np.pi) ** 2
    tau = np.linspace(1e-6, 1.0, 700)
    yield "kernel table 32 x 700", 0.75, 0.75, (-lam[:, None] * tau[None, :] ** 0.75).ravel()


def best_time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--size", type=int, default=20000)
    args = ap.parse_args(argv)

    backends = ["python"] + (["cython"] if mlf._mlf_ext is not None else [])
    if len(backends) == 1:
        print("compiled extension not built; timing the Python kernels only")
    print(f"{'case':24s} {'points':>8s} " + " ".join(f"{b + ' [ms]':>13s}" for b in backends)
          + f" {'speed-up':>9s} {'max rel diff':>13s}")
    start = mlf.backend()
    try:
        for name, a, b, z in cases(args.size):
            times, vals = [], []
            for be in backends:
                mlf.set_backend(be)
                mlf.mittag_leffler(z[:64], a, b)  # build tables outside the timing
                t, v = best_time(lambda: mlf.mittag_leffler(z, a, b), args.repeat)
                times.append(t)
                vals.append(v)
            diff = np.max(np.abs(vals[-1] - vals[0]) / np.maximum(np.abs(vals[0]), 1e-300))
            speed = times[0] / times[-1]
            print(f"{name:24s} {z.size:8d} " + " ".join(f"{1e3 * t:13.2f}" for t in times)
                  + f" {speed:9.1f} {diff:13.2e}")
    finally:
        mlf.set_backend(start)


if __name__ == "__main__":
    main()
