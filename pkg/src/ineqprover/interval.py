"""Outward-rounded interval arithmetic on binary64 floats.

Endpoints are rounded in the safe direction using error-free transforms
(TwoSum / Dekker product), so an endpoint moves by one ulp only when the
floating operation was inexact.  Transcendental functions come from libm
and are widened by two ulps on each side, which covers libm's sub-ulp
error bound.

All values are immutable.  Partial operations raise :class:`PartialDomain`
(or its subclass :class:`DivisionByZeroInterval`); callers use that to
decide membership in a function's natural domain.
"""

from __future__ import annotations

import enum
import math
from fractions import Fraction
from decimal import Decimal
from typing import Iterable, Sequence

__all__ = [
    "Interval",
    "Box",
    "Sign",
    "IntervalError",
    "InvalidEndpoints",
    "PartialDomain",
    "DivisionByZeroInterval",
    "Overflow",
    "NotASubBox",
    "make",
    "thin",
    "add",
    "sub",
    "mul",
    "neg",
    "div",
    "sqr",
    "pow_nat",
    "sqrt",
    "pi_enclosure",
    "sin",
    "cos",
    "atn",
    "acs",
    "atn2",
    "hull",
    "sign_of",
]

_INF = math.inf
_up = math.nextafter

# Veltkamp splitter for Dekker's exact product.
_SPLITTER = 134217729.0  # 2**27 + 1
# Outside this magnitude window the error-free transforms can overflow or
# lose bits to underflow; fall back to unconditional one-ulp widening.
_EFT_MAX = 2.0 ** 995
_EFT_MIN = 2.0 ** -960


class IntervalError(ArithmeticError):
    """Base class for interval arithmetic failures."""


class InvalidEndpoints(IntervalError, ValueError):
    pass


class PartialDomain(IntervalError):
    """An operation was applied (possibly) outside its natural domain."""


class DivisionByZeroInterval(PartialDomain, ZeroDivisionError):
    pass


class Overflow(IntervalError, OverflowError):
    pass


class NotASubBox(ValueError):
    pass


class Sign(enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    UNKNOWN = "unknown"


class Interval(tuple):
    """Closed interval ``[lo, hi]`` with finite float endpoints."""

    __slots__ = ()

    def __new__(cls, lo: float, hi: float) -> Interval:
        lo = float(lo)
        hi = float(hi)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise InvalidEndpoints(f"non-finite endpoint in [{lo!r}, {hi!r}]")
        if lo > hi:
            raise InvalidEndpoints(f"lo > hi in [{lo!r}, {hi!r}]")
        # normalise -0.0 so atan2 never sees a signed zero
        return tuple.__new__(cls, (lo + 0.0, hi + 0.0))

    def __getnewargs__(self):
        return tuple(self)

    @property
    def lo(self) -> float:
        return self[0]

    @property
    def hi(self) -> float:
        return self[1]

    @property
    def width(self) -> float:
        """Width rounded upward."""
        return _sub_up(self[1], self[0])

    @property
    def mid(self) -> float:
        lo, hi = self
        m = lo + 0.5 * (hi - lo)
        return min(max(m, lo), hi)

    @property
    def mag(self) -> float:
        return max(-self[0], self[1])

    def is_thin(self) -> bool:
        return self[0] == self[1]

    def contains(self, x) -> bool:
        """Membership test.  Accepts floats, ints, Fractions or Intervals."""
        if isinstance(x, Interval):
            return self[0] <= x[0] and x[1] <= self[1]
        return self[0] <= x <= self[1]

    def __contains__(self, x) -> bool:
        return self.contains(x)

    def __repr__(self) -> str:
        return f"Interval({self[0]!r}, {self[1]!r})"

    # operator sugar; the module functions are the primary API
    def __add__(self, other):
        return add(self, _coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, _coerce(other))

    def __rsub__(self, other):
        return sub(_coerce(other), self)

    def __mul__(self, other):
        return mul(self, _coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, _coerce(other))

    def __rtruediv__(self, other):
        return div(_coerce(other), self)

    def __neg__(self):
        return neg(self)


def _coerce(x) -> Interval:
    if isinstance(x, Interval):
        return x
    return make(x, x)


def _iv(lo: float, hi: float) -> Interval:
    # internal constructor: endpoints already ordered, only finiteness checked
    if lo == -_INF or hi == _INF or lo != lo or hi != hi:
        raise Overflow(f"endpoint left the finite range: [{lo}, {hi}]")
    return tuple.__new__(Interval, (lo + 0.0, hi + 0.0))


# ---------------------------------------------------------------------------
# directed rounding primitives


def _two_sum_err(a: float, b: float, s: float) -> float:
    bb = s - a
    return (a - (s - bb)) + (b - bb)


def _add_down(a: float, b: float) -> float:
    s = a + b
    if s == _INF or s == -_INF:
        return s
    if _two_sum_err(a, b, s) < 0.0:
        return _up(s, -_INF)
    return s


def _add_up(a: float, b: float) -> float:
    s = a + b
    if s == _INF or s == -_INF:
        return s
    if _two_sum_err(a, b, s) > 0.0:
        return _up(s, _INF)
    return s


def _sub_down(a: float, b: float) -> float:
    return _add_down(a, -b)


def _sub_up(a: float, b: float) -> float:
    return _add_up(a, -b)


def _split(a: float) -> tuple[float, float]:
    t = _SPLITTER * a
    hi = t - (t - a)
    return hi, a - hi


def _prod_err(a: float, b: float, p: float) -> float:
    """Exact ``a*b - p`` for ``p = fl(a*b)`` (Dekker)."""
    ah, al = _split(a)
    bh, bl = _split(b)
    return ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _eft_safe(*xs: float) -> bool:
    for x in xs:
        ax = abs(x)
        if ax > _EFT_MAX or (ax != 0.0 and ax < _EFT_MIN):
            return False
    return True


def _underflow(positive: bool, upward: bool) -> float:
    # exact result is nonzero with known sign but rounded to zero
    if positive:
        return _up(0.0, _INF) if upward else 0.0
    return 0.0 if upward else _up(0.0, -_INF)


def _mul_dir(a: float, b: float, upward: bool) -> float:
    p = a * b
    if p == _INF or p == -_INF:
        return p
    if a == 0.0 or b == 0.0:
        return 0.0
    if p == 0.0:
        return _underflow((a > 0.0) == (b > 0.0), upward)
    if not _eft_safe(a, b, p):
        return _up(p, _INF if upward else -_INF)
    e = _prod_err(a, b, p)
    if upward and e > 0.0:
        return _up(p, _INF)
    if not upward and e < 0.0:
        return _up(p, -_INF)
    return p


def _div_dir(a: float, b: float, upward: bool) -> float:
    q = a / b
    if q == _INF or q == -_INF:
        return q
    if a == 0.0:
        return 0.0
    if q == 0.0:
        return _underflow((a > 0.0) == (b > 0.0), upward)
    if not _eft_safe(a, b, q):
        return _up(q, _INF if upward else -_INF)
    # sign of a - q*b decides on which side of q the true quotient lies
    p = q * b
    e = _prod_err(q, b, p)
    d = a - p  # exact by Sterbenz
    if d == e:
        return q
    above = (d > e) == (b > 0.0)  # true quotient > q
    if upward and above:
        return _up(q, _INF)
    if not upward and not above:
        return _up(q, -_INF)
    return q


def _sqrt_dir(x: float, upward: bool) -> float:
    r = math.sqrt(x)
    if x == 0.0:
        return 0.0
    if not _eft_safe(x, r):
        return _up(r, _INF) if upward else max(0.0, _up(r, -_INF))
    p = r * r
    e = _prod_err(r, r, p)
    d = x - p
    if d == e:
        return r
    if upward and d > e:
        return _up(r, _INF)
    if not upward and d < e:
        return _up(r, -_INF)
    return r


def _widen(v: float, ulps: int, upward: bool) -> float:
    target = _INF if upward else -_INF
    for _ in range(ulps):
        v = _up(v, target)
    return v


# ---------------------------------------------------------------------------
# construction


def _literal_to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        if not math.isfinite(x):
            raise InvalidEndpoints(f"non-finite literal {x!r}")
        return Fraction(x)
    if isinstance(x, (int, Decimal)):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidEndpoints(f"not a real literal: {x!r}") from exc
    raise InvalidEndpoints(f"unsupported literal type {type(x).__name__}")


def _round_fraction(q: Fraction, upward: bool) -> float:
    try:
        f = float(q)  # correctly rounded
    except OverflowError as exc:
        raise InvalidEndpoints(f"literal {q} out of float range") from exc
    if not math.isfinite(f):
        raise InvalidEndpoints(f"literal {q} out of float range")
    exact = Fraction(f)
    if upward and exact < q:
        f = _up(f, _INF)
    elif not upward and exact > q:
        f = _up(f, -_INF)
    if not math.isfinite(f):
        raise InvalidEndpoints(f"literal {q} out of float range")
    return f


def make(lo, hi) -> Interval:
    """Smallest float interval containing the real interval ``[lo, hi]``.

    ``lo`` and ``hi`` may be ints, floats, Fractions, Decimals or decimal
    strings such as ``"0.1"``; inexact literals are widened outward.
    """
    qlo = _literal_to_fraction(lo)
    qhi = _literal_to_fraction(hi)
    if qlo > qhi:
        raise InvalidEndpoints(f"lo > hi: [{lo}, {hi}]")
    return Interval(_round_fraction(qlo, False), _round_fraction(qhi, True))


def thin(x: float) -> Interval:
    return Interval(x, x)


def hull(*xs: Interval) -> Interval:
    return _iv(min(x[0] for x in xs), max(x[1] for x in xs))


def sign_of(x: Interval) -> Sign:
    if x[0] > 0.0:
        return Sign.POSITIVE
    if x[1] < 0.0:
        return Sign.NEGATIVE
    return Sign.UNKNOWN


# ---------------------------------------------------------------------------
# arithmetic


def add(x: Interval, y: Interval) -> Interval:
    return _iv(_add_down(x[0], y[0]), _add_up(x[1], y[1]))


def sub(x: Interval, y: Interval) -> Interval:
    return _iv(_add_down(x[0], -y[1]), _add_up(x[1], -y[0]))


def neg(x: Interval) -> Interval:
    return tuple.__new__(Interval, (-x[1] + 0.0, -x[0] + 0.0))


def _mul_endpoints(pairs: Sequence[tuple[float, float]]) -> Interval:
    prods = [a * b for a, b in pairs]
    pmin = min(prods)
    pmax = max(prods)
    # ties in the rounded products can hide different exact values
    lo = min(_mul_dir(a, b, False) for (a, b), p in zip(pairs, prods) if p == pmin)
    hi = max(_mul_dir(a, b, True) for (a, b), p in zip(pairs, prods) if p == pmax)
    return _iv(lo, hi)


def mul(x: Interval, y: Interval) -> Interval:
    a, b = x
    c, d = y
    if a >= 0.0 and c >= 0.0:
        return _iv(_mul_dir(a, c, False), _mul_dir(b, d, True))
    if b <= 0.0 and d <= 0.0:
        return _iv(_mul_dir(b, d, False), _mul_dir(a, c, True))
    return _mul_endpoints(((a, c), (a, d), (b, c), (b, d)))


def div(x: Interval, y: Interval) -> Interval:
    c, d = y
    if c <= 0.0 <= d:
        raise DivisionByZeroInterval(f"division by interval containing zero: {y}")
    a, b = x
    cands = ((a, c), (a, d), (b, c), (b, d))
    quots = [p / q for p, q in cands]
    qmin = min(quots)
    qmax = max(quots)
    lo = min(_div_dir(p, q, False) for (p, q), v in zip(cands, quots) if v == qmin)
    hi = max(_div_dir(p, q, True) for (p, q), v in zip(cands, quots) if v == qmax)
    return _iv(lo, hi)


def _abs_iv(x: Interval) -> Interval:
    a, b = x
    if a >= 0.0:
        return x
    if b <= 0.0:
        return neg(x)
    return _iv(0.0, max(-a, b))


def sqr(x: Interval) -> Interval:
    """Tight square: never negative, unlike ``mul(x, x)``."""
    a, b = _abs_iv(x)
    return _iv(_mul_dir(a, a, False), _mul_dir(b, b, True))


def _pow_mag(v: float, n: int, upward: bool) -> float:
    # v >= 0; repeated squaring with one-directional rounding stays one-sided
    result = 1.0
    base = v
    while n:
        if n & 1:
            result = _mul_dir(result, base, upward)
        n >>= 1
        if n:
            base = _mul_dir(base, base, upward)
    return result


def pow_nat(x: Interval, n: int) -> Interval:
    if n < 0:
        raise ValueError("pow_nat needs a natural exponent")
    if n == 0:
        return _iv(1.0, 1.0)
    if n == 1:
        return x
    a, b = x
    if n % 2 == 0:
        m = _abs_iv(x)
        return _iv(_pow_mag(m[0], n, False), _pow_mag(m[1], n, True))
    # odd powers are increasing
    lo = _pow_mag(a, n, False) if a >= 0.0 else -_pow_mag(-a, n, True)
    hi = _pow_mag(b, n, True) if b >= 0.0 else -_pow_mag(-b, n, False)
    return _iv(lo, hi)


def sqrt(x: Interval) -> Interval:
    if x[0] < 0.0:
        raise PartialDomain(f"sqrt of interval with negative part: {x}")
    return _iv(_sqrt_dir(x[0], False), _sqrt_dir(x[1], True))


# ---------------------------------------------------------------------------
# transcendental functions

_PI = Interval(math.pi, _up(math.pi, _INF))  # float pi < true pi
_HALF_PI = Interval(0.5 * _PI[0], 0.5 * _PI[1])
_TWO_PI = Interval(2.0 * _PI[0], 2.0 * _PI[1])
_LIBM_ULPS = 2
# beyond this the period multiple k is no longer an exact float
_PERIODIC_MAX = 2.0 ** 48


def pi_enclosure() -> Interval:
    return _PI


def _lib_lo(v: float, floor: float = -_INF) -> float:
    return max(_widen(v, _LIBM_ULPS, False), floor)


def _lib_hi(v: float, ceil: float = _INF) -> float:
    return min(_widen(v, _LIBM_ULPS, True), ceil)


def _hits(x: Interval, offset: Interval, period: Interval) -> bool:
    """Whether ``x`` may contain a point ``offset + k * period``."""
    a, b = x
    kmin = math.floor((a - offset[1]) / period[0]) - 1
    kmax = math.ceil((b - offset[0]) / period[0]) + 1
    if kmax - kmin > 8:
        return True
    mid_off, mid_per = 0.5 * (offset[0] + offset[1]), 0.5 * (period[0] + period[1])
    for k in range(kmin, kmax + 1):
        # float estimate is accurate to ~1e-16 relative; skip clear misses cheaply
        est = mid_off + k * mid_per
        slack = 1e-6 * (abs(est) + 1.0)
        if est + slack < a or est - slack > b:
            continue
        kk = _iv(float(k), float(k))
        crit = add(offset, mul(kk, period))
        if crit[0] <= b and a <= crit[1]:
            return True
    return False


def _periodic(x: Interval, fn, max_at: Interval, min_at: Interval) -> Interval:
    a, b = x
    if _sub_up(b, a) >= _TWO_PI[0] or max(-a, b) > _PERIODIC_MAX:
        return _iv(-1.0, 1.0)
    fa = fn(a)
    fb = fn(b)
    lo = _lib_lo(min(fa, fb), -1.0)
    hi = _lib_hi(max(fa, fb), 1.0)
    if _hits(x, max_at, _TWO_PI):
        hi = 1.0
    if _hits(x, min_at, _TWO_PI):
        lo = -1.0
    return _iv(lo, hi)


def sin(x: Interval) -> Interval:
    return _periodic(x, math.sin, _HALF_PI, neg(_HALF_PI))


def cos(x: Interval) -> Interval:
    return _periodic(x, math.cos, _iv(0.0, 0.0), _PI)


def atn(x: Interval) -> Interval:
    a, b = x
    return _iv(
        _lib_lo(math.atan(a), -_HALF_PI[1]),
        _lib_hi(math.atan(b), _HALF_PI[1]),
    )


def atn2(x: Interval, y: Interval) -> Interval:
    """Angle of the points ``(x, y)``; ``x`` is the abscissa.

    ``atn2([1,1],[0,0])`` encloses 0 and ``atn2([0,0],[1,1])`` encloses
    pi/2.  Values lie in ``(-pi, pi]``.
    """
    a, b = x
    c, d = y
    if a <= 0.0 <= b and c <= 0.0 <= d:
        raise PartialDomain(f"atn2 at the origin: x={x}, y={y}")
    if a < 0.0 and c < 0.0 <= d:
        # straddles the branch cut on the negative x-axis
        return _iv(-_PI[1], _PI[1])
    # no interior critical points and monotone along edges: corners suffice
    angles = [math.atan2(yy, xx) for xx in (a, b) for yy in (c, d)]
    return _iv(_lib_lo(min(angles), -_PI[1]), _lib_hi(max(angles), _PI[1]))


def _acs_point(v: float) -> Interval:
    y = _iv(v, v)
    y2 = sqr(y)
    s = sqrt(_iv(max(0.0, _sub_down(1.0, y2[1])), _sub_up(1.0, y2[0])))
    return sub(_HALF_PI, atn2(s, y))


def acs(y: Interval) -> Interval:
    """arccos via ``acs(y) = pi/2 - atn2(sqrt(1 - y^2), y)``.

    The identity is applied at the endpoints and combined by monotonicity,
    which avoids the origin of ``atn2`` for intervals straddling 0 and +-1.
    """
    c, d = y
    if c < -1.0 or d > 1.0:
        raise PartialDomain(f"acs outside [-1, 1]: {y}")
    upper = _acs_point(c)
    lower = _acs_point(d)
    return _iv(max(lower[0], 0.0), min(upper[1], _PI[1]))


class Box(tuple):
    """Product of intervals, one per dimension."""

    __slots__ = ()

    def __new__(cls, components: Iterable[Interval]) -> Box:
        comps = tuple(components)
        if not comps:
            raise ValueError("a box needs at least one component")
        for c in comps:
            if not isinstance(c, Interval):
                raise TypeError(f"box component {c!r} is not an Interval")
        return tuple.__new__(cls, comps)

    def __getnewargs__(self):
        return (tuple(self),)

    @classmethod
    def point(cls, xs: Iterable[float]) -> Box:
        return cls(Interval(x, x) for x in xs)

    @property
    def dim(self) -> int:
        return len(self)

    def midpoint(self) -> tuple[float, ...]:
        return tuple(c.mid for c in self)

    def contains_point(self, x: Sequence[float]) -> bool:
        return len(x) == len(self) and all(c[0] <= v <= c[1] for c, v in zip(self, x))

    def is_subbox_of(self, other: Box) -> bool:
        return len(self) == len(other) and all(o.contains(c) for c, o in zip(self, other))

    def max_width(self) -> float:
        return max(c.width for c in self)

    def replace(self, dim: int, comp: Interval) -> Box:
        comps = list(self)
        comps[dim] = comp
        return tuple.__new__(Box, tuple(comps))

    def __repr__(self) -> str:
        return "Box(" + ", ".join(f"[{c[0]!r}, {c[1]!r}]" for c in self) + ")"
