import random
import zlib
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ineqprover.certificate import Face, Leaf, LinComb, Mono, Split, iter_nodes, serialize, split_box
from ineqprover.cli import load_corpus
from ineqprover.expr import InequalitySpec, Var, parse
from ineqprover.interval import Box, Interval
from ineqprover.solver import (
    BoxFailure,
    Failed,
    FailureReason,
    Proved,
    SolverConfig,
    SolveStats,
    Strategy,
    choose_center,
    lincomb_rule,
    monotone_reduce,
    verify,
    verify_box,
    verify_many,
)
from ineqprover.taylor import eval_taylor
from oracles import holds_at
from strategies import boxes, exprs

EX1 = 'ineq EX1 "toy" { dom x0 in [0,1]; goal x0*x0 - x0 - 0.1 < 0; }'
DISJ = 'ineq D "d" { dom x0 in [-1,1]; goal x0 - 0.6 < 0 \\/ 0.4 - x0 < 0; }'
BAD = 'ineq B "b" { dom x0 in [-1,1]; goal x0 < 0 \\/ -x0 < 0; }'
MONO = 'ineq M "m" { dom x0 in [0,1]; dom x1 in [0,1]; goal x0 + x1 - 3 < 0; }'


def one(src):
    (s,) = parse(src)
    return s


def count(node, kind):
    return sum(isinstance(n, kind) for _, n in iter_nodes(node))


def models(spec, box):
    return [eval_taylor(f, box) for f in spec.disjuncts]


# ---------------------------------------------------------------------------
# worked examples


def test_ex1_single_leaf():
    r = verify(one(EX1))
    assert isinstance(r.outcome, Proved)
    assert isinstance(r.outcome.cert, Leaf) and r.outcome.cert.disjunct == 0
    assert r.outcome.cert.bound < 0
    assert r.stats.leaf_counts["split"] == 0


def test_disjunction_needs_a_split():
    r = verify(one(DISJ))
    assert r.proved
    assert count(r.outcome.cert, Split) >= 1


def test_disjunction_lincomb_no_split():
    r = verify(one(DISJ), SolverConfig(lincomb_enabled=True))
    assert r.proved
    assert isinstance(r.outcome.cert, LinComb)
    assert r.outcome.cert.weights == (Fraction(1), Fraction(1))


@pytest.mark.parametrize("depth", [5, 20, 40])
def test_unprovable_spec_fails_with_witness_at_zero(depth):
    r = verify(one(BAD), SolverConfig(max_depth=depth))
    assert isinstance(r.outcome, Failed)
    assert r.outcome.reason is FailureReason.MAX_DEPTH
    assert r.outcome.witness[0].contains(0.0)
    assert r.stats.max_depth_reached == depth


def test_monotone_chain():
    r = verify(one(MONO))
    cert = r.outcome.cert
    assert count(cert, Mono) == 2 and count(cert, Split) == 0
    assert isinstance(cert, Mono) and cert.dim == 0 and cert.face is Face.UPPER
    assert isinstance(cert.child, Mono) and cert.child.dim == 1
    assert isinstance(cert.child.child, Leaf)


def test_verify_box_leaf_records_bound():
    s = one(EX1)
    node = verify_box(s, s.domain, 0, SolverConfig())
    assert isinstance(node, Leaf) and node.disjunct == 0
    assert -0.1 <= node.bound < 0


def test_verify_box_depth_guard():
    s = one(BAD)
    out = verify_box(s, s.domain, 3, SolverConfig(max_depth=3))
    assert isinstance(out, BoxFailure) and out.reason is FailureReason.MAX_DEPTH
    assert out.box == s.domain


def test_split_at_exact_midpoint():
    left, right = split_box(Box([Interval(0, 1)]), 0)
    assert left == Box([Interval(0, 0.5)]) and right == Box([Interval(0.5, 1)])


def test_bisects_widest_relative_width():
    # relative widths: 1/max(1, 0.5) = 1 and 3/max(1, 1.5) = 2, so x1 goes first
    s = one('ineq V "v" { dom x0 in [0,1]; dom x1 in [0,3]; '
            'goal x0*x0 - x0 + x1 - 1.6 < 0 \\/ 1.4 - x1 + x0*x0 - x0 < 0; }')
    r = verify(s)
    assert r.proved
    assert isinstance(r.outcome.cert, Split) and r.outcome.cert.dim == 1


def test_monotone_reduce_examples():
    s = one(MONO)
    face, dim, direction = monotone_reduce(s, s.domain, models(s, s.domain))
    assert (dim, direction) == (0, Face.UPPER)
    assert face[0] == Interval(1, 1)
    face2, dim2, _ = monotone_reduce(s, face, models(s, face))
    assert dim2 == 1 and face2 == Box([Interval(1, 1), Interval(1, 1)])

    both = one(BAD)
    assert monotone_reduce(both, both.domain, models(both, both.domain)) is None

    neg = one('ineq N "n" { dom x0 in [0,1]; goal -x0 < 0; }')
    face, dim, direction = monotone_reduce(neg, neg.domain, models(neg, neg.domain))
    assert direction is Face.LOWER and face[0] == Interval(0, 0)
    # the reduced face is false (f = 0), so the search must fail, soundly
    assert not verify(neg, SolverConfig(max_depth=5)).proved


def test_choose_center_examples():
    s = one('ineq C "c" { dom x0 in [0,1]; dom x1 in [2,4]; goal x0 + x1 - 10 < 0; }')
    assert choose_center(s, s.domain, SolverConfig()) == (0.5, 3.0)
    lin = one('ineq H "h" { dom x0 in [0,1]; goal x0 - 2 < 0; }')
    c = choose_center(lin, lin.domain, SolverConfig(strategy=Strategy.HOT_SPOT))
    assert c[0] > 0.9


@settings(max_examples=150)
@given(data=st.data())
def test_hotspot_center_in_box(data):
    n = data.draw(st.integers(1, 3))
    box = data.draw(boxes(n))
    fs = tuple(data.draw(st.lists(exprs(n, max_leaves=6), min_size=1, max_size=3)))
    spec = InequalitySpec("R", "", box, fs)
    c = choose_center(spec, box, SolverConfig(strategy=Strategy.HOT_SPOT))
    assert box.contains_point(c)


def test_lincomb_rule_examples():
    s = one(DISJ)
    leaf = lincomb_rule(s, s.domain, None, [1, 1])
    assert isinstance(leaf, LinComb) and leaf.bound < 0
    assert -0.2 <= leaf.bound <= -0.2 + 1e-15
    with pytest.raises(ValueError):
        lincomb_rule(s, s.domain, None, [0, 0])
    b = one(BAD)
    assert lincomb_rule(b, b.domain, None, [1, 1]) is None


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(max_depth=0)
    with pytest.raises(ValueError):
        SolverConfig(jobs=0)
    assert SolverConfig(strategy="hotspot").strategy is Strategy.HOT_SPOT


# ---------------------------------------------------------------------------
# partial domains and constraints


def test_partial_domain_disjunct_dropped_per_box():
    s = one('ineq P "p" { dom x0 in [-1,1]; goal x0 - 0.1 < 0 \\/ sqrt(x0) - 2 < 0; }')
    r = verify(s)
    assert r.proved
    leaves = [n.disjunct for _, n in iter_nodes(r.outcome.cert) if isinstance(n, Leaf)]
    assert set(leaves) == {0, 1}


def test_constraints():
    ok = one('ineq K "k" { dom x0 in [-1,1]; constraint x0 + 2 >= 0; goal x0 - 2 < 0; }')
    assert verify(ok).proved
    # points with x0 < 0 lie outside every R_i, so the claim is false there
    no = one('ineq L "l" { dom x0 in [-1,1]; constraint x0 >= 0; goal x0 - 2 < 0; }')
    r = verify(no, SolverConfig(max_depth=8))
    assert not r.proved and r.outcome.witness[0].lo < 0


def test_raising_depth_turns_failure_into_proof():
    s = load_corpus()[0][1]  # the upper OUIJTWY identity
    assert not verify(s, SolverConfig(max_depth=8)).proved
    assert verify(s, SolverConfig(max_depth=40)).proved


# ---------------------------------------------------------------------------
# soundness by sampling


def _sample_check(spec, n_points, seed=0):
    rng = random.Random(seed)
    bad = []
    for _ in range(n_points):
        x = tuple(rng.uniform(c.lo, c.hi) for c in spec.domain)
        if not holds_at(spec, x):
            bad.append(x)
    return bad


@pytest.mark.slow
@pytest.mark.parametrize("suite_spec", load_corpus(), ids=lambda p: p[1].id)
def test_corpus_soundness_sampling(suite_spec):
    _, spec = suite_spec
    assert verify(spec).proved
    assert _sample_check(spec, 100_000, seed=zlib.crc32(spec.id.encode())) == []


@st.composite
def linear_specs(draw):
    n = draw(st.integers(1, 4))
    coeffs = [draw(st.integers(-5, 5)) for _ in range(n)]
    lo = [draw(st.integers(-3, 2)) for _ in range(n)]
    hi = [a + draw(st.integers(1, 3)) for a in lo]
    top = sum(c * (h if c > 0 else l) for c, l, h in zip(coeffs, lo, hi))
    margin = draw(st.sampled_from(["0.5", "1", "0.01"]))
    f = None
    for i, c in enumerate(coeffs):
        term = Var(i) * str(abs(c)) if c else None
        if term is None:
            continue
        f = (term if c > 0 else -term) if f is None else (f + term if c > 0 else f - term)
    f = (f if f is not None else Var(0) * "0") - str(top) - margin if top >= 0 else \
        (f if f is not None else Var(0) * "0") + str(-top) - margin
    box = Box([Interval(a, b) for a, b in zip(lo, hi)])
    return InequalitySpec("LIN", "", box, (f,))


@settings(max_examples=60)
@given(linear_specs())
def test_monotone_reduction_soundness_linear(spec):
    r = verify(spec)
    assert r.proved
    assert _sample_check(spec, 200) == []


@settings(max_examples=40)
@given(data=st.data())
def test_random_specs_sound(data):
    n = data.draw(st.integers(1, 2))
    box = data.draw(boxes(n, lo=-1.0, hi=1.0, min_width=0.05))
    fs = tuple(data.draw(st.lists(exprs(n, max_leaves=5), min_size=1, max_size=2)))
    spec = InequalitySpec("R", "", box, fs)
    r = verify(spec, SolverConfig(max_depth=8))
    if r.proved:
        assert _sample_check(spec, 300) == []


# ---------------------------------------------------------------------------
# determinism, accounting and reuse


def test_repeat_runs_identical():
    s = one('ineq A "a" { dom x0 in [-1,1]; dom x1 in [-1,1]; goal x0^2 + x1^2 - 0.6 < 0 \\/ 0.5 - x0^2 - x1^2 < 0; }')
    a = serialize(verify(s).certificate())
    b = serialize(verify(s).certificate())
    assert a == b


def test_jobs_1_vs_8_identical_certificates():
    specs = [s for _, s in load_corpus() if not s.id.startswith("OUIJTWY")]
    seq = verify_many(specs, SolverConfig(jobs=1))
    par = verify_many(specs, SolverConfig(jobs=8))
    for a, b in zip(seq, par):
        assert serialize(a.certificate()) == serialize(b.certificate())
        assert _counts(a) == _counts(b)


def test_parallel_failure_matches_sequential():
    s = one(BAD)
    a = verify(s, SolverConfig(max_depth=12))
    b = verify(s, SolverConfig(max_depth=12, jobs=3))
    assert a.outcome == b.outcome
    assert _counts(a) == _counts(b)


def _counts(r):
    d = r.stats.as_dict()
    d.pop("wall_time", None)
    return d


@pytest.fixture(scope="module")
def pool():
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=2) as ex:
        yield ex


@settings(max_examples=25)
@given(data=st.data())
def test_stats_independent_of_worker_count(pool, data):
    n = data.draw(st.integers(1, 2))
    box = data.draw(boxes(n, lo=-1.0, hi=1.0, min_width=0.05))
    fs = tuple(data.draw(st.lists(exprs(n, max_leaves=5), min_size=1, max_size=2)))
    spec = InequalitySpec("R", "", box, fs)
    a = verify(spec, SolverConfig(max_depth=7, jobs=1))
    b = verify(spec, SolverConfig(max_depth=7, jobs=data.draw(st.sampled_from([2, 3, 5]))), executor=pool)
    assert a.outcome == b.outcome
    assert _counts(a) == _counts(b)


def test_depth_accounting():
    for _, s in load_corpus():
        if s.id.startswith("OUIJTWY"):
            continue
        cfg = SolverConfig(max_depth=12)
        r = verify(s, cfg)
        assert r.stats.max_depth_reached <= cfg.max_depth
        splits = r.stats.leaf_counts["split"]
        assert r.stats.boxes_visited >= 2 * splits + 1
        if r.proved:
            assert splits == count(r.outcome.cert, Split)


def _shape(node):
    if isinstance(node, Leaf):
        return ("leaf", node.disjunct)
    if isinstance(node, LinComb):
        return ("lincomb", node.weights)
    if isinstance(node, Mono):
        return ("mono", node.dim, node.face, _shape(node.child))
    return ("split", node.dim, _shape(node.left), _shape(node.right))


@settings(max_examples=40)
@given(data=st.data())
def test_hessian_reuse_is_decision_equivalent(data):
    n = data.draw(st.integers(1, 3))
    box = data.draw(boxes(n, lo=-1.0, hi=1.0, min_width=0.05))
    fs = tuple(data.draw(st.lists(exprs(n, max_leaves=5), min_size=1, max_size=2)))
    spec = InequalitySpec("R", "", box, fs)
    a = verify(spec, SolverConfig(max_depth=8, hessian_reuse=True))
    b = verify(spec, SolverConfig(max_depth=8, hessian_reuse=False))
    assert a.proved == b.proved
    assert a.stats.boxes_visited == b.stats.boxes_visited
    assert a.stats.box_passes <= b.stats.box_passes
    if a.proved:
        assert _shape(a.outcome.cert) == _shape(b.outcome.cert)
    else:
        assert a.outcome == b.outcome


def test_stats_merge():
    a, b = SolveStats(), SolveStats()
    a.visit(3)
    b.visit(5)
    b.leaf_counts["leaf"] += 2
    a.merge(b)
    assert a.boxes_visited == 2 and a.max_depth_reached == 5 and a.leaf_counts["leaf"] == 2
