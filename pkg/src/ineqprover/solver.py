"""Branch-and-bound verification of disjunctive inequalities over boxes.

Each box is decided by the first applicable rule, in this fixed order:

1. monotone reduction: some non-thin coordinate has the same strict
   derivative sign for every disjunct, so every disjunct is maximised on
   one face and the box is replaced by that face;
2. bound: some disjunct is certified on the box and its Taylor upper
   bound is negative;
3. linear combination (opt-in): the uniform sum of disjuncts has a
   negative upper bound;
4. bisection of the widest (relative width) coordinate.

With ``hessian_reuse`` a node first tries the derivative enclosures
inherited from an ancestor and only evaluates fresh ones when the
inherited data cannot settle the decision the fresh data would make.
Trees and ``boxes_visited`` are therefore identical with reuse on or off.
"""

from __future__ import annotations

import enum
import time
from collections import deque
from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional, Sequence, Union

from .certificate import (
    CertNode,
    Certificate,
    Face,
    Leaf,
    LinComb,
    Mono,
    Split,
    constraints_certified,
    face_box,
    split_box,
    weighted_sum,
)
from .expr import InequalitySpec
from .interval import Box, Overflow, Sign
from .taylor import (
    TaylorModel,
    center_pass,
    eval_taylor,
    inherit_hessian,
    partial_sign,
    point_value_and_gradient,
    upper_bound,
)

__all__ = [
    "Strategy",
    "SolverConfig",
    "SolveStats",
    "FailureReason",
    "BoxFailure",
    "Proved",
    "Failed",
    "SolveResult",
    "verify",
    "verify_many",
    "verify_box",
    "monotone_reduce",
    "choose_center",
    "lincomb_rule",
]

HOTSPOT_STEPS = 5
# pending subtrees per worker when a pool is used
TASKS_PER_JOB = 4
# inherited enclosures are tried while the widest side exceeds this fraction
# of the widest side of the box they were computed on
REUSE_MIN_RATIO = 0.5


class Strategy(enum.Enum):
    CENTER_MID = "center"
    HOT_SPOT = "hotspot"


@dataclass(frozen=True)
class SolverConfig:
    max_depth: int = 40
    strategy: Strategy = Strategy.CENTER_MID
    lincomb_enabled: bool = False
    jobs: int = 1
    hessian_reuse: bool = True

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        if not isinstance(self.strategy, Strategy):
            object.__setattr__(self, "strategy", Strategy(self.strategy))


class FailureReason(enum.Enum):
    MAX_DEPTH = "MaxDepth"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class BoxFailure:
    box: Box
    reason: FailureReason
    depth: int
    path: tuple = ()


@dataclass
class SolveStats:
    boxes_visited: int = 0
    max_depth_reached: int = 0
    leaf_counts: dict = field(default_factory=lambda: {"leaf": 0, "lincomb": 0, "mono": 0, "split": 0})
    box_passes: int = 0  # full-box derivative evaluations
    wall_time: float = 0.0

    def visit(self, depth: int) -> None:
        self.boxes_visited += 1
        if depth > self.max_depth_reached:
            self.max_depth_reached = depth

    def merge(self, other: SolveStats) -> None:
        self.boxes_visited += other.boxes_visited
        self.max_depth_reached = max(self.max_depth_reached, other.max_depth_reached)
        for k, v in other.leaf_counts.items():
            self.leaf_counts[k] = self.leaf_counts.get(k, 0) + v
        self.box_passes += other.box_passes

    def as_dict(self) -> dict:
        return {
            "boxes_visited": self.boxes_visited,
            "max_depth_reached": self.max_depth_reached,
            "leaf_counts": dict(self.leaf_counts),
            "box_passes": self.box_passes,
            "wall_time": self.wall_time,
        }


@dataclass(frozen=True)
class Proved:
    cert: CertNode


@dataclass(frozen=True)
class Failed:
    witness: Box
    reason: FailureReason


@dataclass
class SolveResult:
    spec_id: str
    outcome: Union[Proved, Failed]
    stats: SolveStats

    @property
    def proved(self) -> bool:
        return isinstance(self.outcome, Proved)

    def certificate(self) -> Certificate:
        if not self.proved:
            raise ValueError(f"{self.spec_id} was not proved")
        return Certificate(self.spec_id, self.outcome.cert)


# ---------------------------------------------------------------------------
# rules


def choose_center(spec: InequalitySpec, box: Box, cfg: SolverConfig) -> tuple:
    """Expansion point for the Taylor models on ``box``.

    ``HOT_SPOT`` runs a few projected gradient-ascent steps (plain float
    arithmetic) on the disjunct that looks easiest at the midpoint.  The
    result only affects tightness, never soundness.
    """
    mid = box.midpoint()
    if cfg.strategy is Strategy.CENTER_MID:
        return mid
    best = None
    for f in spec.disjuncts:
        v, g = point_value_and_gradient(f, mid)
        if v is not None and (best is None or v < best[0]):
            best = (v, g, f)
    if best is None:
        return mid
    value, grad, f = best
    half = [0.5 * (c.hi - c.lo) for c in box]
    x = list(mid)
    step = 1.0
    for _ in range(HOTSPOT_STEPS):
        gmax = max((abs(g) for g, h in zip(grad, half) if h > 0.0), default=0.0)
        if not gmax > 0.0:
            break
        trial = [
            min(max(xi + step * hi * gi / gmax, c.lo), c.hi)
            for xi, hi, gi, c in zip(x, half, grad, box)
        ]
        v, g = point_value_and_gradient(f, trial)
        if v is not None and v > value:
            x, value, grad = trial, v, g
        else:
            step *= 0.5
    return tuple(x)


def monotone_reduce(spec: InequalitySpec, box: Box, models: Sequence[TaylorModel]):
    """``(face_box, dim, face)`` for the first reducible coordinate, else ``None``.

    Every model must be certified on ``box`` and the derivative sign in the
    chosen coordinate must be strict and shared by all disjuncts.
    """
    if not all(m.domain_ok for m in models) or not constraints_certified(spec, box):
        return None
    for j in range(len(box)):
        if box[j].is_thin():
            continue
        signs = {partial_sign(m, j) for m in models}
        if len(signs) == 1:
            (s,) = signs
            if s is not Sign.UNKNOWN:
                face = Face.UPPER if s is Sign.POSITIVE else Face.LOWER
                return face_box(box, j, face), j, face
    return None


def lincomb_rule(spec: InequalitySpec, box: Box, models, weights: Sequence, center=None):
    """``LinComb`` leaf if ``sum_i w_i f_i`` is certified negative, else ``None``.

    ``models`` is accepted for symmetry with the other rules; the weighted
    sum gets its own Taylor model.  Bad weights raise ``ValueError``.
    """
    weights = tuple(Fraction(w) for w in weights)
    expr = weighted_sum(spec, weights)
    if center is None:
        center = box.midpoint()
    if not constraints_certified(spec, box):
        return None
    tm = eval_taylor(expr, box, center)
    if not tm.domain_ok:
        return None
    bound = upper_bound(tm)
    if bound < 0.0:
        return LinComb(weights, bound, None if center == box.midpoint() else tuple(center))
    return None


def _bisect_dim(box: Box) -> Optional[int]:
    best, best_w = None, 0.0
    for j, c in enumerate(box):
        if c.is_thin():
            continue
        w = (c.hi - c.lo) / max(1.0, abs(c.mid))
        if w > best_w:
            best, best_w = j, w
    return best


# ---------------------------------------------------------------------------
# per-node decision


@dataclass(frozen=True)
class _Decision:
    kind: str  # leaf | lincomb | mono | split | fail
    node: Optional[CertNode] = None
    dim: int = -1
    face: Optional[Face] = None
    models: Optional[tuple] = None  # handed to the children
    reason: Optional[FailureReason] = None


def _leaf_center(box: Box, center: tuple):
    return None if center == box.midpoint() else center


def _tail(spec, box, depth, cfg, center, constraints_ok) -> _Decision:
    """Rules after the per-disjunct ones; they never depend on reuse."""
    if cfg.lincomb_enabled and spec.k >= 2:
        leaf = lincomb_rule(spec, box, None, [1] * spec.k, center)
        if leaf is not None:
            return _Decision("lincomb", node=leaf)
    return _Decision("split")


def _decide_fresh(spec, box, center, models, constraints_ok) -> Optional[_Decision]:
    reduced = monotone_reduce(spec, box, models) if constraints_ok else None
    if reduced is not None:
        _, dim, face = reduced
        return _Decision("mono", dim=dim, face=face)
    if constraints_ok:
        for i, m in enumerate(models):
            # any upper bound is at least f(center)
            if m.domain_ok and m.f_center.lo < 0.0:
                u = upper_bound(m)
                if u < 0.0:
                    return _Decision("leaf", node=Leaf(i, u, _leaf_center(box, center)))
    return None


def _decide_inherited(spec, box, center, models, constraints_ok) -> Optional[_Decision]:
    """Decision that fresh models would make, or ``None`` if undecidable here.

    Inherited enclosures contain the fresh ones, so a rule that fires with
    them also fires fresh; a rule is ruled out only by center evidence.
    """
    if not constraints_ok:
        return _Decision("none")
    # center pass failed => the fresh box pass fails too
    ruled_out = [m.f_center is None for m in models]
    if any(not m.domain_ok and not r for m, r in zip(models, ruled_out)):
        return None
    mono_possible = not any(ruled_out)
    if mono_possible:
        for j in range(len(box)):
            if box[j].is_thin():
                continue
            signs = {partial_sign(m, j) for m in models}
            if len(signs) == 1 and Sign.UNKNOWN not in signs:
                face = Face.UPPER if signs == {Sign.POSITIVE} else Face.LOWER
                return _Decision("mono", dim=j, face=face)
            pos = all(m.grad_center[j].hi > 0.0 for m in models)
            negs = all(m.grad_center[j].lo < 0.0 for m in models)
            if pos or negs:
                return None
    for i, m in enumerate(models):
        if ruled_out[i] or m.f_center.lo >= 0.0:
            continue
        u = upper_bound(m)
        if u < 0.0:
            return _Decision("leaf", node=Leaf(i, u, _leaf_center(box, center)))
        if m.f_center.lo < 0.0:
            return None
    return _Decision("none")


def _may_inherit(inherited, box: Box) -> bool:
    source = inherited[0].source_box
    return box.max_width() > REUSE_MIN_RATIO * source.max_width()


def _decide(spec, box, depth, cfg, inherited, stats) -> _Decision:
    try:
        center = choose_center(spec, box, cfg)
        constraints_ok = constraints_certified(spec, box)
        centers = [center_pass(f, center) for f in spec.disjuncts]
        decision = None
        models = None
        if cfg.hessian_reuse and inherited is not None and _may_inherit(inherited, box):
            models = tuple(
                inherit_hessian(m, box, center, center_values=cv) for m, cv in zip(inherited, centers)
            )
            try:
                decision = _decide_inherited(spec, box, center, models, constraints_ok)
            except Overflow:
                decision = None
            if decision is not None and decision.kind == "none":
                decision = _tail(spec, box, depth, cfg, center, constraints_ok)
        if decision is None:
            models = tuple(
                eval_taylor(f, box, center, center_values=cv) for f, cv in zip(spec.disjuncts, centers)
            )
            stats.box_passes += len(models)
            decision = _decide_fresh(spec, box, center, models, constraints_ok)
            if decision is None:
                decision = _tail(spec, box, depth, cfg, center, constraints_ok)
    except Overflow:
        return _Decision("fail", reason=FailureReason.INCONCLUSIVE)
    if decision.kind == "split":
        if depth >= cfg.max_depth:
            return _Decision("fail", reason=FailureReason.MAX_DEPTH)
        dim = _bisect_dim(box)
        if dim is None:
            return _Decision("fail", reason=FailureReason.INCONCLUSIVE)
        try:
            split_box(box, dim)
        except ValueError:
            return _Decision("fail", reason=FailureReason.INCONCLUSIVE)
        return replace(decision, dim=dim, models=models)
    return replace(decision, models=models)


def _children(box: Box, depth: int, d: _Decision):
    if d.kind == "mono":
        return [(face_box(box, d.dim, d.face), depth, (0,))]
    if d.kind == "split":
        left, right = split_box(box, d.dim)
        return [(left, depth + 1, (0,)), (right, depth + 1, (1,))]
    return []


def verify_box(spec: InequalitySpec, box: Box, depth: int = 0, cfg: Optional[SolverConfig] = None,
               parent_models=None, *, stats: Optional[SolveStats] = None,
               path: tuple = ()) -> Union[CertNode, BoxFailure]:
    """Certificate subtree for ``box`` or the first failing sub-box (DFS order)."""
    cfg = cfg or SolverConfig()
    stats = stats if stats is not None else SolveStats()
    stats.visit(depth)
    d = _decide(spec, box, depth, cfg, parent_models, stats)
    if d.kind == "fail":
        return BoxFailure(box, d.reason, depth, path)
    if d.kind in ("leaf", "lincomb"):
        stats.leaf_counts[d.kind] += 1
        return d.node
    stats.leaf_counts[d.kind] += 1
    subtrees = []
    for child_box, child_depth, step in _children(box, depth, d):
        sub = verify_box(spec, child_box, child_depth, cfg, d.models, stats=stats, path=path + step)
        if isinstance(sub, BoxFailure):
            return sub
        subtrees.append(sub)
    if d.kind == "mono":
        return Mono(d.dim, d.face, subtrees[0])
    return Split(d.dim, subtrees[0], subtrees[1])


# ---------------------------------------------------------------------------
# deterministic parallel driver


@dataclass(frozen=True)
class _Task:
    path: tuple
    box: Box
    depth: int
    models: Optional[tuple]


@dataclass
class _Plan:
    spec: InequalitySpec
    decided: dict  # path -> _Decision for internal/leaf nodes of the frontier
    tasks: list  # _Task sorted by path
    failures: list  # BoxFailure found while expanding
    visited: list  # (path, SolveStats) for every node decided while expanding
    elapsed: float


def _expand(spec: InequalitySpec, cfg: SolverConfig, target: int) -> _Plan:
    """Breadth-first expansion until ``target`` subtrees are pending."""
    t0 = time.perf_counter()
    queue = deque([_Task((), spec.domain, 0, None)])
    decided = {}
    failures = []
    visited = []
    while queue and len(queue) < target and not failures:
        t = queue.popleft()
        stats = SolveStats()
        stats.visit(t.depth)
        visited.append((t.path, stats))
        d = _decide(spec, t.box, t.depth, cfg, t.models, stats)
        if d.kind == "fail":
            failures.append(BoxFailure(t.box, d.reason, t.depth, t.path))
            continue
        stats.leaf_counts[d.kind] += 1
        decided[t.path] = d
        for child_box, child_depth, step in _children(t.box, t.depth, d):
            queue.append(_Task(t.path + step, child_box, child_depth, d.models))
    tasks = sorted(queue, key=lambda t: t.path)
    return _Plan(spec, decided, tasks, failures, visited, time.perf_counter() - t0)


def _run_task(spec: InequalitySpec, cfg: SolverConfig, task: _Task):
    t0 = time.perf_counter()
    stats = SolveStats()
    result = verify_box(spec, task.box, task.depth, cfg, task.models, stats=stats, path=task.path)
    stats.wall_time = time.perf_counter() - t0
    return result, stats


def _assemble(plan: _Plan, results: dict, path: tuple = ()) -> CertNode:
    if path in results:
        return results[path]
    d = plan.decided[path]
    if d.kind in ("leaf", "lincomb"):
        return d.node
    if d.kind == "mono":
        return Mono(d.dim, d.face, _assemble(plan, results, path + (0,)))
    return Split(d.dim, _assemble(plan, results, path + (0,)), _assemble(plan, results, path + (1,)))


def _finish(plan: _Plan, outputs: list) -> SolveResult:
    """Combine task outputs (aligned with ``plan.tasks``, ``None`` = skipped).

    Tuple order on paths is DFS pre-order, so the first failure is the one
    with the smallest path.  Stats count exactly the nodes a sequential DFS
    visits before stopping there, whatever the frontier looked like.
    """
    fails = list(plan.failures)
    fails += [out[0] for out in outputs if out is not None and isinstance(out[0], BoxFailure)]
    first_fail = min(fails, key=lambda f: f.path) if fails else None

    def reached(path):
        return first_fail is None or path <= first_fail.path

    stats = SolveStats()
    for path, node_stats in plan.visited:
        if reached(path):
            stats.merge(node_stats)
    compute = plan.elapsed
    results = {}
    for task, out in zip(plan.tasks, outputs):
        if not reached(task.path):
            break
        result, task_stats = out
        stats.merge(task_stats)
        compute += task_stats.wall_time
        results[task.path] = result
    stats.wall_time = compute
    if first_fail is not None:
        return SolveResult(plan.spec.id, Failed(first_fail.box, first_fail.reason), stats)
    return SolveResult(plan.spec.id, Proved(_assemble(plan, results)), stats)


def _run_sequential(plan: _Plan, cfg: SolverConfig) -> list:
    outputs = []
    fail_path = min((f.path for f in plan.failures), default=None)
    for task in plan.tasks:
        if fail_path is not None and task.path > fail_path:
            outputs.append(None)
            continue
        out = _run_task(plan.spec, cfg, task)
        outputs.append(out)
        if isinstance(out[0], BoxFailure):
            fail_path = out[0].path if fail_path is None else min(fail_path, out[0].path)
    return outputs


def verify_many(specs: Sequence[InequalitySpec], cfg: Optional[SolverConfig] = None,
                executor: Optional[Executor] = None) -> list[SolveResult]:
    """Verify several specs sharing one worker pool; results in input order.

    Certificates do not depend on ``cfg.jobs``: subtrees are assembled by
    tree position, never by completion order.
    """
    cfg = cfg or SolverConfig()
    if cfg.jobs == 1 and executor is None:
        return [verify(s, cfg) for s in specs]
    target = TASKS_PER_JOB * cfg.jobs
    plans = [_expand(s, cfg, target) for s in specs]
    own = executor is None
    pool = executor or ProcessPoolExecutor(max_workers=cfg.jobs)
    try:
        futures = [[pool.submit(_run_task, p.spec, cfg, t) for t in p.tasks] for p in plans]
        results = []
        for plan, futs in zip(plans, futures):
            results.append(_finish(plan, [f.result() for f in futs]))
    finally:
        if own:
            pool.shutdown(cancel_futures=True)
    return results


def verify(spec: InequalitySpec, cfg: Optional[SolverConfig] = None,
           executor: Optional[Executor] = None) -> SolveResult:
    """Prove ``spec`` or report the first box (DFS order) where no rule applies.

    A ``Failed`` outcome is inconclusive: its witness box is where the
    search gave up, not a counterexample.
    """
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    if cfg.jobs == 1 and executor is None:
        plan = _expand(spec, cfg, 1)
        result = _finish(plan, _run_sequential(plan, cfg))
    else:
        result = verify_many([spec], cfg, executor)[0]
    result.stats.wall_time = time.perf_counter() - t0
    return result
