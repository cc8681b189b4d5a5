"""Timing comparison between the compiled and pure-numpy kernel backends.

Run from the repository root:

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel is timed on the same inputs under both backends; the end-to-end
row trains a full reservoir-stabilized run. Times are per-call medians.
"""
import argparse
import importlib
import os
import statistics
import sys
import time

import numpy as np


def load_backend(name):
    os.environ["WRSOL_KERNELS"] = name
    for mod in list(sys.modules):
        if mod.startswith("wrsol"):
            del sys.modules[mod]
    import wrsol._kernels as kernels

    importlib.reload(kernels)
    return kernels


def bench(fn, repeat, inner):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn()
        times.append((time.perf_counter() - t0) / inner)
    return statistics.median(times)


def make_inputs(rng):
    dim = 50000
    w = rng.standard_normal(dim)
    theta = rng.standard_normal(dim)
    nnz = 200
    idx = np.sort(rng.choice(dim, size=nnz, replace=False)).astype(np.int64)
    val = rng.standard_normal(nnz)

    rows = 2000
    row_nnz = 100
    indptr = np.arange(rows + 1, dtype=np.int64) * row_nnz
    indices = np.concatenate([
        np.sort(rng.choice(dim, size=row_nnz, replace=False))
        for _ in range(rows)
    ]).astype(np.int64)
    values = rng.standard_normal(rows * row_nnz)
    labels = rng.choice(np.array([-1.0, 1.0]), size=rows)
    return w, theta, idx, val, indptr, indices, values, labels


def kernel_rows(repeat):
    rng = np.random.default_rng(4242)
    w, theta, idx, val, indptr, indices, values, labels = make_inputs(rng)
    out = {}
    for name in ("python", "compiled"):
        k = load_backend(name)
        if k.BACKEND != name:
            print("backend %r unavailable, got %r" % (name, k.BACKEND))
            return None
        wc = w.copy()
        tc = theta.copy()
        out[name] = {
            "dot": bench(lambda: k.dot(wc, idx, val), repeat, 2000),
            "axpy": bench(lambda: k.axpy(wc, 0.01, idx, val), repeat, 2000),
            "fsol_step": bench(
                lambda: k.fsol_step(tc, wc, 0.1, 0.001, idx, val), repeat, 2000
            ),
            "eval_csr": bench(
                lambda: k.eval_accuracy_csr(wc, indptr, indices, values, labels),
                repeat,
                20,
            ),
        }
    return out


def end_to_end(repeat):
    out = {}
    for name in ("python", "compiled"):
        load_backend(name)
        from wrsol.data import split_examples, synth_noisy_stream
        from wrsol.driver import RunConfig, run_trial

        data = synth_noisy_stream(
            dim=2000, n=4000, flip_prob=0.05, seed=3, density=0.05
        ).examples
        train, test = split_examples(data, 0.7, seed=1)
        cfg = RunConfig(algo="fsol", seed=1, ensemble="wrs", reservoir_k=32,
                        checkpoint_target=50)

        def run():
            run_trial(cfg, train, test, 2000)

        out[name] = bench(run, repeat, 1)
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5,
                    help="timing repetitions per row")
    args = ap.parse_args()

    rows = kernel_rows(args.repeat)
    if rows is None:
        return 1
    e2e = end_to_end(args.repeat)
    rows["python"]["end_to_end"] = e2e["python"]
    rows["compiled"]["end_to_end"] = e2e["compiled"]

    print("%-12s %14s %14s %9s" % ("kernel", "python", "compiled", "speedup"))
    for key in ("dot", "axpy", "fsol_step", "eval_csr", "end_to_end"):
        py = rows["python"][key]
        ck = rows["compiled"][key]
        print("%-12s %12.2fus %12.2fus %8.1fx"
              % (key, py * 1e6, ck * 1e6, py / ck))
    return 0


if __name__ == "__main__":
    sys.exit(main())
