"""Depth sweep on the inverse-trig identity acs(y) = pi/2 - atn2(sqrt(1 - y^2), y).

For each max_depth, both directions are verified; proofs are replayed and
optionally written out as certificate files.
"""

import argparse
import time
from pathlib import Path

from ineqprover.certificate import replay, serialize
from ineqprover.cli import load_corpus
from ineqprover.solver import SolverConfig, Strategy, verify


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--depths", type=int, nargs="+", default=[8, 12, 14, 15, 20, 40])
    ap.add_argument("--strategy", choices=[s.value for s in Strategy], default="center")
    ap.add_argument("--cert-out", type=Path, help="directory for certificates of proved runs")
    args = ap.parse_args()

    specs = [s for suite, s in load_corpus() if suite == "ouijtwy"]
    print(f"{'id':<12} {'depth':>5} {'outcome':<22} {'boxes':>6} {'verify s':>9} {'replay s':>9}")
    for depth in args.depths:
        for spec in specs:
            t0 = time.perf_counter()
            r = verify(spec, SolverConfig(max_depth=depth, strategy=Strategy(args.strategy)))
            tv = time.perf_counter() - t0
            tr = ""
            if r.proved:
                t0 = time.perf_counter()
                ok = replay(spec, r.certificate()).accepted
                tr = f"{time.perf_counter() - t0:9.3f}" + ("" if ok else " REJECTED")
                outcome = "Proved"
                if args.cert_out:
                    args.cert_out.mkdir(parents=True, exist_ok=True)
                    (args.cert_out / f"{spec.id}.d{depth}.cert").write_bytes(serialize(r.certificate()))
            else:
                w = r.outcome.witness[0]
                outcome = f"{r.outcome.reason.value} @[{w.lo:.3g}, {w.hi:.3g}]"
            print(f"{spec.id:<12} {depth:>5} {outcome:<22} {r.stats.boxes_visited:>6} {tv:>9.3f} {tr:>9}")


if __name__ == "__main__":
    main()
