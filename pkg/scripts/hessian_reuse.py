"""Measure lazy Hessian reuse: box passes and wall time with and without it.

Runs are interleaved and the order alternates, so warm-up drift hits both
settings equally.  Reports medians.
"""

import argparse
import statistics
import time

from ineqprover.cli import load_corpus
from ineqprover.solver import SolverConfig, verify


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--runs", type=int, default=9)
    ap.add_argument("--only", nargs="*", help="item ids to include (default: all)")
    args = ap.parse_args()

    print(f"{'id':<15} {'boxes':>6} {'passes on':>10} {'passes off':>11} {'ms on':>9} {'ms off':>9} {'ratio':>6}")
    for _, spec in load_corpus():
        if args.only and spec.id not in args.only:
            continue
        cfgs = [SolverConfig(hessian_reuse=True), SolverConfig(hessian_reuse=False)]
        times = ([], [])
        results = [None, None]
        for i in range(args.runs):
            order = (0, 1) if i % 2 == 0 else (1, 0)
            for k in order:
                t0 = time.perf_counter()
                results[k] = verify(spec, cfgs[k])
                times[k].append(time.perf_counter() - t0)
        on, off = results
        assert on.stats.boxes_visited == off.stats.boxes_visited, spec.id
        m_on, m_off = statistics.median(times[0]), statistics.median(times[1])
        print(f"{spec.id:<15} {on.stats.boxes_visited:>6} {on.stats.box_passes:>10} {off.stats.box_passes:>11} "
              f"{m_on * 1e3:>9.2f} {m_off * 1e3:>9.2f} {m_on / m_off:>6.2f}")


if __name__ == "__main__":
    main()
