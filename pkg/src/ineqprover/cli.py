"""Command-line front end: ``verify``, ``replay`` and ``bench``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from .certificate import deserialize, replay, serialize
from .expr import InequalitySpec, ParseError, parse
from .solver import Failed, SolveResult, SolverConfig, Strategy, verify_many

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INPUT = 2

CORPUS_SUITES = ("ouijtwy", "polynomial", "disjunction", "monotone", "six")
DRIFT_TOLERANCE = 0.20


@dataclass
class Record:
    id: str
    outcome: str
    boxes_visited: int
    max_depth_reached: int
    wall_time: float
    cert_path: Optional[str] = None
    reason: Optional[str] = None
    witness: Optional[list] = None
    leaf_counts: dict = field(default_factory=dict)


@dataclass
class RunReport:
    records: list
    totals: dict
    config: dict
    warnings: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def _record(result: SolveResult, cert_path=None) -> Record:
    st = result.stats
    rec = Record(result.spec_id, "Proved" if result.proved else "Failed", st.boxes_visited,
                 st.max_depth_reached, st.wall_time, cert_path, leaf_counts=dict(st.leaf_counts))
    if isinstance(result.outcome, Failed):
        rec.reason = result.outcome.reason.value
        rec.witness = [[c.lo, c.hi] for c in result.outcome.witness]
    return rec


def _totals(records) -> dict:
    return {
        "specs": len(records),
        "proved": sum(r.outcome == "Proved" for r in records),
        "failed": sum(r.outcome == "Failed" for r in records),
        "boxes_visited": sum(r.boxes_visited for r in records),
        "wall_time": sum(r.wall_time for r in records),
    }


def _config_echo(cfg: SolverConfig) -> dict:
    return {
        "max_depth": cfg.max_depth,
        "strategy": cfg.strategy.value,
        "lincomb_enabled": cfg.lincomb_enabled,
        "jobs": cfg.jobs,
        "hessian_reuse": cfg.hessian_reuse,
    }


def make_report(results, cfg: SolverConfig, cert_paths=None) -> RunReport:
    cert_paths = cert_paths or [None] * len(results)
    records = [_record(r, p) for r, p in zip(results, cert_paths)]
    return RunReport(records, _totals(records), _config_echo(cfg))


def format_text(report: RunReport) -> str:
    lines = []
    for r in report.records:
        line = f"{r.id:<20} {r.outcome:<7} boxes={r.boxes_visited:<7} depth={r.max_depth_reached:<3} {r.wall_time:8.3f}s"
        if r.reason:
            line += f"  {r.reason} witness={r.witness}"
        if r.cert_path:
            line += f"  -> {r.cert_path}"
        lines.append(line)
    t = report.totals
    lines.append(f"{t['proved']}/{t['specs']} proved, {t['boxes_visited']} boxes, {t['wall_time']:.3f}s")
    lines.extend(f"warning: {w}" for w in report.warnings)
    return "\n".join(lines)


def _emit(report: RunReport, fmt: str) -> None:
    print(report.to_json() if fmt == "json" else format_text(report))


def load_specs(paths) -> list[InequalitySpec]:
    """Parse every file; ids must be unique across files."""
    specs, seen = [], {}
    for p in paths:
        try:
            parsed = parse(Path(p).read_text(encoding="utf-8"))
        except ParseError as e:
            e.path = str(p)
            raise
        for s in parsed:
            if s.id in seen:
                raise ValueError(f"{p}: duplicate id {s.id!r} (first defined in {seen[s.id]})")
            seen[s.id] = p
            specs.append(s)
    return specs


def load_corpus() -> list[tuple[str, InequalitySpec]]:
    """Builtin benchmark corpus as ``(suite, spec)`` pairs."""
    root = resources.files("ineqprover") / "corpus"
    out = []
    for suite in CORPUS_SUITES:
        for s in parse((root / f"{suite}.ineq").read_text(encoding="utf-8")):
            out.append((suite, s))
    return out


def load_golden() -> dict:
    root = resources.files("ineqprover") / "corpus"
    return json.loads((root / "golden.json").read_text(encoding="utf-8"))


def _config(args) -> SolverConfig:
    return SolverConfig(
        max_depth=getattr(args, "max_depth", 40),
        strategy=Strategy(args.strategy),
        lincomb_enabled=getattr(args, "lincomb", False),
        jobs=args.jobs,
        hessian_reuse=not getattr(args, "no_hessian_reuse", False),
    )


def _input_error(e: Exception) -> int:
    if isinstance(e, ParseError) and hasattr(e, "path"):
        print(f"{e.path}:{e.line}:{e.column}: error: {e.message}", file=sys.stderr)
    else:
        print(f"error: {e}", file=sys.stderr)
    return EXIT_INPUT


def cmd_verify(args) -> int:
    try:
        specs = load_specs(args.files)
    except (OSError, ValueError) as e:
        return _input_error(e)
    cfg = _config(args)
    results = verify_many(specs, cfg)
    paths = [None] * len(results)
    if args.cert_out:
        out = Path(args.cert_out)
        out.mkdir(parents=True, exist_ok=True)
        for i, r in enumerate(results):
            if r.proved:
                path = out / f"{r.spec_id}.cert"
                path.write_bytes(serialize(r.certificate()))
                paths[i] = str(path)
    report = make_report(results, cfg, paths)
    _emit(report, args.format)
    return EXIT_OK if all(r.proved for r in results) else EXIT_FAILED


def cmd_replay(args) -> int:
    try:
        specs = load_specs([args.ineq])
        cert = deserialize(Path(args.cert).read_bytes())
    except (OSError, ValueError) as e:
        return _input_error(e)
    spec = next((s for s in specs if s.id == cert.ineq_id), None)
    if spec is None:
        ids = ", ".join(s.id for s in specs)
        print(f"error: certificate is for {cert.ineq_id!r}; file defines {ids}", file=sys.stderr)
        return EXIT_INPUT
    t0 = time.perf_counter()
    verdict = replay(spec, cert)
    dt = time.perf_counter() - t0
    if verdict:
        print(f"{spec.id}: Accept ({dt:.3f}s)")
        return EXIT_OK
    print(f"{spec.id}: {verdict}")
    return EXIT_FAILED


def run_bench(jobs: int = 1, primary: Strategy = Strategy.CENTER_MID, golden=None):
    """Run the corpus under both strategies.

    Returns ``(rows, report)``; ``report`` holds the ``primary`` strategy's
    records plus drift warnings against ``golden``.
    """
    corpus = load_corpus()
    specs = [s for _, s in corpus]
    by_strategy = {}
    for st in Strategy:
        cfg = SolverConfig(strategy=st, jobs=jobs)
        by_strategy[st] = (cfg, verify_many(specs, cfg))
    rows = []
    warnings = []
    for i, (suite, spec) in enumerate(corpus):
        row = {"suite": suite, "id": spec.id}
        for st in Strategy:
            r = by_strategy[st][1][i]
            row[st.value] = {
                "outcome": "Proved" if r.proved else "Failed",
                "boxes_visited": r.stats.boxes_visited,
                "wall_time": r.stats.wall_time,
            }
            ref = (golden or {}).get(spec.id, {}).get(st.value)
            if ref:
                drift = abs(r.stats.boxes_visited - ref) / ref
                if drift > DRIFT_TOLERANCE:
                    warnings.append(
                        f"{spec.id} [{st.value}]: boxes_visited {r.stats.boxes_visited} vs golden {ref} ({drift:+.0%})"
                    )
        rows.append(row)
    cfg, results = by_strategy[primary]
    report = make_report(results, cfg)
    report.warnings = warnings
    return rows, report


def format_bench(rows, warnings) -> str:
    head = f"{'suite':<12} {'id':<16} {'center boxes':>12} {'time':>8} {'hotspot boxes':>13} {'time':>8}"
    lines = [head, "-" * len(head)]
    for row in rows:
        c, h = row["center"], row["hotspot"]
        lines.append(
            f"{row['suite']:<12} {row['id']:<16} {c['boxes_visited']:>12} {c['wall_time']:>7.3f}s"
            f" {h['boxes_visited']:>13} {h['wall_time']:>7.3f}s"
            + ("" if c["outcome"] == h["outcome"] == "Proved" else f"  {c['outcome']}/{h['outcome']}")
        )
    lines.extend(f"warning: {w}" for w in warnings)
    return "\n".join(lines)


def cmd_bench(args) -> int:
    rows, report = run_bench(args.jobs, Strategy(args.strategy), load_golden())
    if args.format == "json":
        print(json.dumps({"table": rows, "report": asdict(report)}, indent=2))
    else:
        print(format_bench(rows, report.warnings))
    ok = all(row[st.value]["outcome"] == "Proved" for row in rows for st in Strategy)
    return EXIT_OK if ok else EXIT_FAILED


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ineqprover", description="Interval-arithmetic inequality prover")
    sub = ap.add_subparsers(dest="command", required=True)
    strategies = [s.value for s in Strategy]

    v = sub.add_parser("verify", help="prove every inequality in the given files")
    v.add_argument("files", nargs="+")
    v.add_argument("--max-depth", type=_positive, default=40)
    v.add_argument("--strategy", choices=strategies, default="center")
    v.add_argument("--lincomb", action="store_true", help="try the uniform linear combination rule")
    v.add_argument("--jobs", type=_positive, default=1)
    v.add_argument("--cert-out", metavar="DIR")
    v.add_argument("--format", choices=["text", "json"], default="text")
    v.add_argument("--no-hessian-reuse", action="store_true")
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("replay", help="check a certificate against its inequality")
    r.add_argument("ineq")
    r.add_argument("cert")
    r.set_defaults(func=cmd_replay)

    b = sub.add_parser("bench", help="run the builtin corpus under both strategies")
    b.add_argument("--strategy", choices=strategies, default="center",
                   help="strategy whose records go into the json report")
    b.add_argument("--jobs", type=_positive, default=1)
    b.add_argument("--format", choices=["text", "json"], default="text")
    b.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
