"""Second-order Taylor models from forward-mode interval AD.

A jet carries interval enclosures of the value, the gradient and the
(upper-triangular) Hessian of an expression over a box.  Gradients and
Hessians are stored sparsely: a missing entry is exactly zero.

Derivative rules used for the builtins (``u`` is the argument):

=========  ======================  =============================
function   first derivative        second derivative
=========  ======================  =============================
sqrt       1 / (2 sqrt(u))         -2 * (first derivative)^3
sin        cos(u)                  -sin(u)
cos        -sin(u)                 -cos(u)
atn        1 / (1 + u^2)           -2 u * (first derivative)^2
acs        -1 / sqrt(1 - u^2)      u * (first derivative)^3
1/u        -1 / u^2                2 / u^3
u^n        n u^(n-1)               n (n-1) u^(n-2)
=========  ======================  =============================

``atn2(x, y)`` with ``r2 = x^2 + y^2`` has partials ``-y/r2`` and ``x/r2``,
and second partials ``2xy/r2^2``, ``(y^2 - x^2)/r2^2`` and ``-2xy/r2^2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from . import interval as iv
from .expr import Add, Atn2, Const, Div, Expr, Func, Mul, Neg, Pi, Pow, Sub, Var, evaluate
from .interval import Box, Interval, NotASubBox, PartialDomain, Sign

__all__ = [
    "Jet",
    "TaylorModel",
    "jet",
    "eval_taylor",
    "inherit_hessian",
    "upper_bound",
    "partial_sign",
    "point_value_and_gradient",
]

_ZERO = Interval(0.0, 0.0)
_ONE = Interval(1.0, 1.0)
_TWO = Interval(2.0, 2.0)
_HALF = Interval(0.5, 0.5)


@dataclass(frozen=True)
class Jet:
    v: Interval
    g: dict
    h: Optional[dict]  # None when only first order was requested


def _const(v: Interval, order: int) -> Jet:
    return Jet(v, {}, {} if order == 2 else None)


def _add_maps(a: dict, b: dict, op) -> dict:
    out = dict(a)
    for k, y in b.items():
        x = out.get(k)
        out[k] = op(x, y) if x is not None else (y if op is iv.add else iv.neg(y))
    return out


def _j_add(a: Jet, b: Jet) -> Jet:
    h = _add_maps(a.h, b.h, iv.add) if a.h is not None else None
    return Jet(iv.add(a.v, b.v), _add_maps(a.g, b.g, iv.add), h)


def _j_sub(a: Jet, b: Jet) -> Jet:
    h = _add_maps(a.h, b.h, iv.sub) if a.h is not None else None
    return Jet(iv.sub(a.v, b.v), _add_maps(a.g, b.g, iv.sub), h)


def _j_neg(a: Jet) -> Jet:
    h = {k: iv.neg(x) for k, x in a.h.items()} if a.h is not None else None
    return Jet(iv.neg(a.v), {k: iv.neg(x) for k, x in a.g.items()}, h)


def _scale(m: dict, s: Interval) -> dict:
    return {k: iv.mul(x, s) for k, x in m.items()}


def _outer(ga: dict, gb: dict, symmetric: bool) -> dict:
    """Upper-triangular entries of ``ga gb^T + gb ga^T`` (or ``ga ga^T``)."""
    out = {}
    keys = sorted(set(ga) | set(gb))
    for ii, i in enumerate(keys):
        for j in keys[ii:]:
            if symmetric:
                ai, aj = ga.get(i), ga.get(j)
                if ai is None or aj is None:
                    continue
                out[(i, j)] = iv.mul(ai, aj) if i != j else iv.sqr(ai)
                continue
            acc = None
            for x, y in ((ga.get(i), gb.get(j)), (ga.get(j), gb.get(i))):
                if x is not None and y is not None:
                    p = iv.mul(x, y)
                    acc = p if acc is None else iv.add(acc, p)
            if acc is not None:
                out[(i, j)] = acc
    return out


def _j_mul(a: Jet, b: Jet) -> Jet:
    v = iv.mul(a.v, b.v)
    g = _add_maps(_scale(a.g, b.v), _scale(b.g, a.v), iv.add)
    h = None
    if a.h is not None:
        h = _add_maps(_scale(a.h, b.v), _scale(b.h, a.v), iv.add)
        h = _add_maps(h, _outer(a.g, b.g, symmetric=False), iv.add)
    return Jet(v, g, h)


def _chain(u: Jet, d0: Interval, d1: Interval, d2: Optional[Interval]) -> Jet:
    g = _scale(u.g, d1)
    h = None
    if u.h is not None:
        h = _scale(u.h, d1)
        if d2 is not None and u.g:
            h = _add_maps(h, _scale(_outer(u.g, u.g, symmetric=True), d2), iv.add)
    return Jet(d0, g, h)


def _chain2(a: Jet, b: Jet, d0, dx, dy, dxx, dxy, dyy) -> Jet:
    g = _add_maps(_scale(a.g, dx), _scale(b.g, dy), iv.add)
    h = None
    if a.h is not None:
        h = _add_maps(_scale(a.h, dx), _scale(b.h, dy), iv.add)
        h = _add_maps(h, _scale(_outer(a.g, a.g, True), dxx), iv.add)
        h = _add_maps(h, _scale(_outer(a.g, b.g, False), dxy), iv.add)
        h = _add_maps(h, _scale(_outer(b.g, b.g, True), dyy), iv.add)
    return Jet(d0, g, h)


def _sqr_jet(u: Jet, order: int) -> Jet:
    return _chain(u, iv.sqr(u.v), iv.mul(_TWO, u.v), _TWO if order == 2 else None)


def _recip(u: Jet, order: int) -> Jet:
    inv = iv.div(_ONE, u.v)
    d1 = iv.neg(iv.sqr(inv))
    d2 = iv.mul(_TWO, iv.pow_nat(inv, 3)) if order == 2 else None
    return _chain(u, inv, d1, d2)


def _func(name: str, u: Jet, order: int) -> Jet:
    x = u.v
    second = order == 2
    if name == "sqrt":
        d0 = iv.sqrt(x)
        d1 = iv.div(_ONE, iv.mul(_TWO, d0))
        d2 = iv.neg(iv.mul(_TWO, iv.pow_nat(d1, 3))) if second else None
    elif name == "sin":
        d0 = iv.sin(x)
        d1 = iv.cos(x)
        d2 = iv.neg(d0) if second else None
    elif name == "cos":
        d0 = iv.cos(x)
        d1 = iv.neg(iv.sin(x))
        d2 = iv.neg(d0) if second else None
    elif name == "atn":
        d0 = iv.atn(x)
        d1 = iv.div(_ONE, iv.add(_ONE, iv.sqr(x)))
        d2 = iv.mul(iv.mul(_TWO, x), iv.neg(iv.sqr(d1))) if second else None
    elif name == "acs":
        d0 = iv.acs(x)
        s = iv.sqrt(iv.sub(_ONE, iv.sqr(x)))
        d1 = iv.neg(iv.div(_ONE, s))
        d2 = iv.mul(x, iv.pow_nat(d1, 3)) if second else None
    else:
        raise ValueError(f"unknown function {name!r}")
    return _chain(u, d0, d1, d2)


def _atn2(a: Jet, b: Jet, order: int) -> Jet:
    x, y = a.v, b.v
    if x.lo < 0.0 and y.lo < 0.0 <= y.hi:
        # the angle jumps across the negative x-axis: no derivative there
        raise PartialDomain(f"atn2 not differentiable across the branch cut: x={x}, y={y}")
    d0 = iv.atn2(x, y)
    r2 = iv.add(iv.sqr(x), iv.sqr(y))
    dx = iv.neg(iv.div(y, r2))
    dy = iv.div(x, r2)
    dxx = dxy = dyy = None
    if order == 2:
        q = iv.sqr(r2)
        dxx = iv.div(iv.mul(_TWO, iv.mul(x, y)), q)
        dyy = iv.neg(dxx)
        dxy = iv.div(iv.sub(iv.sqr(y), iv.sqr(x)), q)
    return _chain2(a, b, d0, dx, dy, dxx, dxy, dyy)


def jet(e: Expr, box: Sequence[Interval], order: int = 2) -> Jet:
    """Forward-mode interval jet of ``e`` over ``box``.

    Raises :class:`PartialDomain` if the value or a needed derivative is
    not defined on the whole box.
    """
    if isinstance(e, Var):
        return Jet(box[e.index], {e.index: _ONE}, {} if order == 2 else None)
    if isinstance(e, Const):
        return _const(e.value, order)
    if isinstance(e, Add):
        return _j_add(jet(e.left, box, order), jet(e.right, box, order))
    if isinstance(e, Sub):
        return _j_sub(jet(e.left, box, order), jet(e.right, box, order))
    if isinstance(e, Mul):
        if e.left == e.right:
            return _sqr_jet(jet(e.left, box, order), order)
        return _j_mul(jet(e.left, box, order), jet(e.right, box, order))
    if isinstance(e, Div):
        num = jet(e.left, box, order)
        den = jet(e.right, box, order)
        out = _j_mul(num, _recip(den, order))
        return Jet(iv.div(num.v, den.v), out.g, out.h)
    if isinstance(e, Neg):
        return _j_neg(jet(e.arg, box, order))
    if isinstance(e, Pow):
        n = e.exponent
        if n == 0:
            evaluate(e.base, box)  # u^0 is defined only where u is
            return _const(_ONE, order)
        u = jet(e.base, box, order)
        if n == 1:
            return u
        d0 = iv.pow_nat(u.v, n)
        d1 = iv.mul(Interval(n, n), iv.pow_nat(u.v, n - 1))
        d2 = iv.mul(Interval(n * (n - 1), n * (n - 1)), iv.pow_nat(u.v, n - 2)) if order == 2 else None
        return _chain(u, d0, d1, d2)
    if isinstance(e, Func):
        return _func(e.name, jet(e.arg, box, order), order)
    if isinstance(e, Atn2):
        return _atn2(jet(e.x, box, order), jet(e.y, box, order), order)
    if isinstance(e, Pi):
        return _const(iv.pi_enclosure(), order)
    raise TypeError(f"unknown expression node {e!r}")


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TaylorModel:
    """Certified second-order expansion of ``expr`` over ``box`` around ``center``.

    ``grad_box`` and ``hess_box`` enclose the derivatives over
    ``source_box``, which contains ``box``; they are ``None`` when
    ``domain_ok`` is false.  ``f_center``/``grad_center`` are ``None`` only
    if the center itself lies outside the natural domain.
    """

    expr: Expr
    box: Box
    center: tuple
    f_center: Optional[Interval]
    grad_center: Optional[tuple]
    grad_box: Optional[tuple]
    hess_box: Optional[tuple]
    domain_ok: bool
    source_box: Box


def _dense_grad(g: dict, n: int) -> tuple:
    return tuple(g.get(i, _ZERO) for i in range(n))


def _dense_hess(h: dict, n: int) -> tuple:
    rows = []
    for i in range(n):
        rows.append(tuple(h.get((min(i, j), max(i, j)), _ZERO) for j in range(n)))
    return tuple(rows)


def center_pass(e: Expr, center: Sequence[float]):
    """Value and gradient enclosures at a point, or ``(None, None)``."""
    n = len(center)
    try:
        j = jet(e, Box.point(center), order=1)
    except PartialDomain:
        return None, None
    return j.v, _dense_grad(j.g, n)


def box_pass(e: Expr, box: Box):
    """Gradient and Hessian enclosures over ``box``, or ``None`` off-domain."""
    n = len(box)
    try:
        j = jet(e, box, order=2)
    except PartialDomain:
        return None
    return _dense_grad(j.g, n), _dense_hess(j.h, n)


def _check_center(box: Box, center: Sequence[float]) -> tuple:
    center = tuple(float(c) for c in center)
    if not box.contains_point(center):
        raise ValueError(f"center {center} is not inside {box!r}")
    return center


def eval_taylor(e: Expr, box: Box, center: Optional[Sequence[float]] = None,
                *, center_values=None) -> TaylorModel:
    """Two-pass Taylor model: thin pass at ``center``, full pass over ``box``.

    ``center_values`` may carry a precomputed ``center_pass`` result.
    Overflow propagates as :class:`interval.Overflow`.
    """
    box = Box(box)
    center = _check_center(box, box.midpoint() if center is None else center)
    f_c, g_c = center_values if center_values is not None else center_pass(e, center)
    over_box = box_pass(e, box) if f_c is not None else None
    if over_box is None:
        return TaylorModel(e, box, center, f_c, g_c, None, None, False, box)
    g_box, h_box = over_box
    return TaylorModel(e, box, center, f_c, g_c, g_box, h_box, True, box)


def inherit_hessian(parent: TaylorModel, child_box: Box, child_center: Sequence[float],
                    *, center_values=None) -> TaylorModel:
    """Model on a sub-box reusing the parent's derivative enclosures.

    Only the thin center pass is recomputed; the parent's gradient and
    Hessian bounds stay valid on any sub-box.
    """
    child_box = Box(child_box)
    if not child_box.is_subbox_of(parent.box):
        raise NotASubBox(f"{child_box!r} is not inside {parent.box!r}")
    center = _check_center(child_box, child_center)
    f_c, g_c = center_values if center_values is not None else center_pass(parent.expr, center)
    ok = parent.domain_ok and f_c is not None
    return TaylorModel(
        parent.expr,
        child_box,
        center,
        f_c,
        g_c,
        parent.grad_box if ok else None,
        parent.hess_box if ok else None,
        ok,
        parent.source_box,
    )


def displacements(tm: TaylorModel) -> list[Interval]:
    """Outward enclosures of ``x_j - c_j`` over the box."""
    return [
        Interval(iv._sub_down(comp.lo, c), iv._sub_up(comp.hi, c))
        for c, comp in zip(tm.center, tm.box)
    ]


def taylor_enclosure(tm: TaylorModel) -> Interval:
    """Enclosure of ``f`` over ``tm.box`` from the Lagrange form.

    ``f(c) + g(c).d + 1/2 d^T H d`` with ``d`` ranging over the
    displacement box and ``H`` the Hessian enclosure over the box.
    """
    if not tm.domain_ok:
        raise PartialDomain("Taylor model is not certified on its box")
    d = displacements(tm)
    total = tm.f_center
    for g, dj in zip(tm.grad_center, d):
        if dj != _ZERO:
            total = iv.add(total, iv.mul(g, dj))
    n = len(d)
    quad = _ZERO
    for i in range(n):
        if d[i] == _ZERO:
            continue
        row = tm.hess_box[i]
        quad = iv.add(quad, iv.mul(iv.mul(_HALF, row[i]), iv.sqr(d[i])))
        for j in range(i + 1, n):
            if d[j] == _ZERO or row[j] == _ZERO:
                continue
            quad = iv.add(quad, iv.mul(row[j], iv.mul(d[i], d[j])))
    return iv.add(total, quad)


def upper_bound(tm: TaylorModel) -> float:
    """Certified ``U`` with ``f(x) <= U`` for all ``x`` in ``tm.box``."""
    return taylor_enclosure(tm).hi


def partial_sign(tm: TaylorModel, dim: int) -> Sign:
    if not tm.domain_ok:
        raise PartialDomain("Taylor model is not certified on its box")
    return iv.sign_of(tm.grad_box[dim])


def point_value_and_gradient(e: Expr, x: Sequence[float]):
    """Non-rigorous float value and gradient (midpoints of a thin jet)."""
    v, g = center_pass(e, x)
    if v is None:
        return None, None
    return v.mid, [gi.mid for gi in g]
