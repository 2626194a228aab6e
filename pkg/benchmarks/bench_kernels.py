"""Compare the compiled and numpy kernel backends.

Usage::

    python3 benchmarks/bench_kernels.py [--sizes 100 200 400] [--T 50] [--p 3] [--repeats 3]

Prints the best-of-``repeats`` wall time of each kernel per backend, the
speed-up, and whether the two backends returned identical results.
"""
import argparse
import time

import numpy as np

from etdclust import kernels
from etdclust.rtlp import neighbour_matrix
from etdclust.etd import quantile


def best_time(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def bench(n, T, p, repeats, backends):
    values = np.random.default_rng(n).normal(size=(n, T, p))
    rows = []
    outs, groups = {}, {}
    for name, mod in backends.items():
        def run_etd():
            out = np.zeros((n, n))
            mod.etd_rows(values, out, 0, n)
            return out
        t_etd, outs[name] = best_time(run_etd, repeats)
        thr = quantile(outs[name][np.triu_indices(n, 1)], 0.1)
        adj = np.ascontiguousarray(neighbour_matrix(outs[name], thr), dtype=np.uint8)
        t_fl, groups[name] = best_time(lambda: mod.first_layer_groups(adj), repeats)
        rows.append((name, t_etd, t_fl))
    names = list(backends)
    same = all(np.array_equal(outs[names[0]], outs[k]) for k in names[1:]) and all(
        np.array_equal(np.asarray(groups[names[0]][0]), np.asarray(groups[k][0]))
        and list(groups[names[0]][1]) == list(groups[k][1]) for k in names[1:])
    return rows, same


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 200, 400])
    ap.add_argument("--T", type=int, default=50)
    ap.add_argument("--p", type=int, default=3)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)}")
    print(f"{'N':>5}  {'backend':<8}  {'etd_rows [s]':>12}  {'first_layer [s]':>15}")
    for n in args.sizes:
        rows, same = bench(n, args.T, args.p, args.repeats, backends)
        for name, t_etd, t_fl in rows:
            print(f"{n:>5}  {name:<8}  {t_etd:>12.4f}  {t_fl:>15.4f}")
        if len(rows) > 1:
            base = rows[-1]
            print(f"{'':>5}  speed-up  {base[1] / rows[0][1]:>11.1f}x  {base[2] / rows[0][2]:>14.1f}x"
                  f"  identical={same}")


if __name__ == "__main__":
    main()
