"""Compare CenterMid and HotSpot centering on the builtin corpus.

Prints a markdown table of boxes visited and best-of-N wall time per item,
and the drift of each count against the golden file.
"""

import argparse
import time

from ineqprover.cli import load_corpus, load_golden
from ineqprover.solver import SolverConfig, Strategy, verify


def timed(spec, cfg, repeat):
    best, result = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = verify(spec, cfg)
        best = min(best, time.perf_counter() - t0)
    return result, best


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3, help="runs per item; the fastest is reported")
    ap.add_argument("--max-depth", type=int, default=40)
    ap.add_argument("--skip", nargs="*", default=[], help="item ids to leave out")
    args = ap.parse_args()

    golden = load_golden()
    print("| suite | id | center boxes | center ms | hotspot boxes | hotspot ms | drift c/h |")
    print("|---|---|---:|---:|---:|---:|---|")
    totals = {st: [0, 0.0] for st in Strategy}
    for suite, spec in load_corpus():
        if spec.id in args.skip:
            continue
        cells = []
        drift = []
        for st in Strategy:
            r, t = timed(spec, SolverConfig(max_depth=args.max_depth, strategy=st), args.repeat)
            boxes = r.stats.boxes_visited if r.proved else f"{r.stats.boxes_visited} (failed)"
            cells += [str(boxes), f"{t * 1e3:.1f}"]
            totals[st][0] += r.stats.boxes_visited
            totals[st][1] += t
            ref = golden.get(spec.id, {}).get(st.value)
            drift.append(f"{(r.stats.boxes_visited - ref) / ref:+.0%}" if ref else "n/a")
        print(f"| {suite} | {spec.id} | " + " | ".join(cells) + f" | {'/'.join(drift)} |")
    c, h = totals[Strategy.CENTER_MID], totals[Strategy.HOT_SPOT]
    print(f"| total | | {c[0]} | {c[1] * 1e3:.1f} | {h[0]} | {h[1] * 1e3:.1f} | |")


if __name__ == "__main__":
    main()
