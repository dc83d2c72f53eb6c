"""Benchmark the compiled integration core against the pure-Python fallback.

Run:  python3 benchmarks/bench_kernels.py [--quick]

Workloads mirror the package's hot paths: long tangent-augmented flows (the
Lyapunov/sweep inner loop) and many short time-T maps (statistics runs).
"""

import argparse
import time

import numpy as np

from shearlab.kernels import available_backends, get_backend
from shearlab.radial_shear import make_radial_shear


def bench(fn, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true")
    args = ap.parse_args()

    prog = make_radial_shear(0.05, 20.0)
    tape = prog.tape
    span = 60.0 if args.quick else 240.0
    n_maps = 20 if args.quick else 100

    y_tan = np.array([1.1, 0.0, 1.0, 0.0, 0.0, 1.0])
    y_plain = np.array([1.1, 0.0])

    workloads = {
        "tangent flow (span %.0f)" % span: lambda seg: seg(
            tape, 0.0, y_tan, 0.0, span, 1e-8, 1e-8, 2.0, 0.0,
            True, False, False, 10 ** 7),
        "plain flow (span %.0f)" % span: lambda seg: seg(
            tape, 0.0, y_plain, 0.0, span, 1e-8, 1e-8, 2.0, 0.0,
            False, False, False, 10 ** 7),
        "%d kicked maps" % n_maps: lambda seg: [
            (lambda y1: seg(tape, 0.0, y1[1], 1.0, 31.0, 1e-8, 1e-8, 2.0,
                            y1[3], False, False, False, 10 ** 7))(
                seg(tape, 0.1, y_plain, 0.0, 1.0, 1e-8, 1e-8, 2.0, 0.0,
                    False, False, False, 10 ** 7))
            for _ in range(n_maps)],
        "recorded trajectory": lambda seg: seg(
            tape, 0.0, y_plain, 0.0, span / 4, 1e-10, 1e-10, 1.0, 0.0,
            False, False, True, 10 ** 7),
    }

    backends = available_backends()
    print("backends:", ", ".join(backends))
    results = {}
    for name, work in workloads.items():
        row = {}
        for b in backends:
            seg = get_backend(b)
            row[b] = bench(lambda: work(seg), repeat=2 if "python" in b else 3)
        results[name] = row

    width = max(len(n) for n in results) + 2
    head = "workload".ljust(width) + "".join(b.rjust(14) for b in backends)
    if len(backends) == 2:
        head += "speedup".rjust(10)
    print(head)
    for name, row in results.items():
        line = name.ljust(width)
        for b in backends:
            line += ("%.4fs" % row[b]).rjust(14)
        if len(backends) == 2:
            line += ("%.1fx" % (row["python"] / row["compiled"])).rjust(10)
        print(line)


if __name__ == "__main__":
    main()
