"""Decision-tree certificates and the replay checker.

A certificate records every solver decision but no boxes: the root box is
the spec domain and each child box is re-derived from the recorded action.
Replay recomputes every bound with its own arithmetic and never searches.

File format (UTF-8 JSON, keys sorted, floats as ``float.hex`` strings)::

    {"ineq_id": "EX1", "root": {"k": "leaf", "disjunct": 0,
     "bound": "-0x1.9999999999998p-4"}, "version": 1}
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

from . import interval as iv
from .expr import Const, Div, Expr, InequalitySpec, Mul, evaluate
from .interval import Box, Interval, Overflow, PartialDomain, Sign
from .taylor import box_pass, eval_taylor, upper_bound

__all__ = [
    "Face",
    "Leaf",
    "LinComb",
    "Mono",
    "Split",
    "CertNode",
    "Certificate",
    "MalformedCertificate",
    "RejectReason",
    "Verdict",
    "serialize",
    "deserialize",
    "replay",
    "split_box",
    "face_box",
    "constraints_certified",
    "weighted_sum",
    "iter_nodes",
]

FORMAT_VERSION = 1


class Face(enum.Enum):
    UPPER = "upper"
    LOWER = "lower"


@dataclass(frozen=True)
class Leaf:
    disjunct: int
    bound: float
    center: Optional[tuple] = None  # None means the box midpoint


@dataclass(frozen=True)
class LinComb:
    weights: tuple
    bound: float
    center: Optional[tuple] = None


@dataclass(frozen=True)
class Mono:
    dim: int
    face: Face
    child: "CertNode"


@dataclass(frozen=True)
class Split:
    dim: int
    left: "CertNode"
    right: "CertNode"


CertNode = Union[Leaf, LinComb, Mono, Split]


@dataclass(frozen=True)
class Certificate:
    ineq_id: str
    root: CertNode


# ---------------------------------------------------------------------------
# box geometry shared with the solver


def split_box(box: Box, dim: int) -> tuple[Box, Box]:
    """Bisect ``box`` at the float midpoint of ``dim``.

    Raises ``ValueError`` if the component cannot be split (thin, or its
    endpoints are adjacent floats).
    """
    comp = box[dim]
    m = comp.mid
    if not comp.lo < m < comp.hi:
        raise ValueError(f"cannot bisect {comp!r}")
    return box.replace(dim, Interval(comp.lo, m)), box.replace(dim, Interval(m, comp.hi))


def face_box(box: Box, dim: int, face: Face) -> Box:
    v = box[dim].hi if face is Face.UPPER else box[dim].lo
    return box.replace(dim, Interval(v, v))


def constraints_certified(spec: InequalitySpec, box: Box) -> bool:
    """Whether every explicit constraint ``g >= 0`` holds on the whole box."""
    for g in spec.constraints:
        try:
            if evaluate(g, box).lo < 0.0:
                return False
        except PartialDomain:
            return False
    return True


def _weight_expr(w: Fraction) -> Expr:
    if w.denominator == 1:
        return Const(str(w.numerator))
    return Div(Const(str(w.numerator)), Const(str(w.denominator)))


def weighted_sum(spec: InequalitySpec, weights: Sequence[Fraction]) -> Expr:
    """``sum_i w_i f_i`` over the nonzero weights."""
    weights = [Fraction(w) for w in weights]
    if len(weights) != spec.k:
        raise ValueError(f"expected {spec.k} weights, got {len(weights)}")
    if any(w < 0 for w in weights) or not any(weights):
        raise ValueError("weights must be nonnegative and not all zero")
    total = None
    for w, f in zip(weights, spec.disjuncts):
        if w == 0:
            continue
        term = f if w == 1 else Mul(_weight_expr(w), f)
        total = term if total is None else total + term
    return total


# ---------------------------------------------------------------------------
# serialization


class MalformedCertificate(ValueError):
    def __init__(self, message: str, position):
        super().__init__(f"malformed certificate at {position}: {message}")
        self.position = position


def _hex(x: float) -> str:
    return float(x).hex()


def _node_to_obj(node: CertNode) -> dict:
    if isinstance(node, Leaf):
        obj = {"k": "leaf", "disjunct": node.disjunct, "bound": _hex(node.bound)}
    elif isinstance(node, LinComb):
        obj = {"k": "lincomb", "weights": [str(w) for w in node.weights], "bound": _hex(node.bound)}
    elif isinstance(node, Mono):
        return {"k": "mono", "dim": node.dim, "dir": node.face.value, "child": _node_to_obj(node.child)}
    elif isinstance(node, Split):
        return {
            "k": "split",
            "dim": node.dim,
            "left": _node_to_obj(node.left),
            "right": _node_to_obj(node.right),
        }
    else:
        raise TypeError(f"not a certificate node: {node!r}")
    if node.center is not None:
        obj["center"] = [_hex(c) for c in node.center]
    return obj


def serialize(cert: Certificate) -> bytes:
    doc = {"ineq_id": cert.ineq_id, "version": FORMAT_VERSION, "root": _node_to_obj(cert.root)}
    return (json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")


def _field(obj: dict, key: str, kind, path: str):
    if key not in obj:
        raise MalformedCertificate(f"missing field {key!r}", path)
    value = obj[key]
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise MalformedCertificate(f"field {key!r} must be an integer", path)
    if kind is not int and not isinstance(value, kind):
        raise MalformedCertificate(f"field {key!r} has the wrong type", path)
    return value


def _float_field(obj: dict, key: str, path: str) -> float:
    text = _field(obj, key, str, path)
    try:
        return float.fromhex(text)
    except ValueError:
        raise MalformedCertificate(f"field {key!r} is not a hex float", path) from None


def _center_field(obj: dict, path: str):
    if "center" not in obj:
        return None
    raw = _field(obj, "center", list, path)
    out = []
    for c in raw:
        if not isinstance(c, str):
            raise MalformedCertificate("center entries must be hex floats", path)
        try:
            out.append(float.fromhex(c))
        except ValueError:
            raise MalformedCertificate("center entries must be hex floats", path) from None
    return tuple(out)


_KNOWN_KEYS = {
    "leaf": {"k", "disjunct", "bound", "center"},
    "lincomb": {"k", "weights", "bound", "center"},
    "mono": {"k", "dim", "dir", "child"},
    "split": {"k", "dim", "left", "right"},
}


def _obj_to_node(obj, path: str) -> CertNode:
    if not isinstance(obj, dict):
        raise MalformedCertificate("node must be an object", path)
    kind = _field(obj, "k", str, path)
    if kind not in _KNOWN_KEYS:
        raise MalformedCertificate(f"unknown node kind {kind!r}", path)
    extra = set(obj) - _KNOWN_KEYS[kind]
    if extra:
        raise MalformedCertificate(f"unexpected fields {sorted(extra)}", path)
    if kind == "leaf":
        return Leaf(_field(obj, "disjunct", int, path), _float_field(obj, "bound", path),
                    _center_field(obj, path))
    if kind == "lincomb":
        raw = _field(obj, "weights", list, path)
        try:
            weights = tuple(Fraction(w) for w in raw if isinstance(w, str))
        except (ValueError, ZeroDivisionError):
            raise MalformedCertificate("weights must be rational strings", path) from None
        if len(weights) != len(raw):
            raise MalformedCertificate("weights must be rational strings", path)
        return LinComb(weights, _float_field(obj, "bound", path), _center_field(obj, path))
    if kind == "mono":
        direction = _field(obj, "dir", str, path)
        try:
            face = Face(direction)
        except ValueError:
            raise MalformedCertificate(f"bad direction {direction!r}", path) from None
        return Mono(_field(obj, "dim", int, path), face, _obj_to_node(obj.get("child"), path + "/child"))
    return Split(
        _field(obj, "dim", int, path),
        _obj_to_node(obj.get("left"), path + "/left"),
        _obj_to_node(obj.get("right"), path + "/right"),
    )


def deserialize(data: bytes | str) -> Certificate:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedCertificate("not UTF-8", f"byte {exc.start}") from None
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise MalformedCertificate(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
    if not isinstance(doc, dict):
        raise MalformedCertificate("top level must be an object", "root")
    version = _field(doc, "version", int, "top")
    if version != FORMAT_VERSION:
        raise MalformedCertificate(f"unsupported version {version}", "top")
    ineq_id = _field(doc, "ineq_id", str, "top")
    return Certificate(ineq_id, _obj_to_node(doc.get("root"), "root"))


def iter_nodes(node: CertNode, path: str = "root"):
    """Pre-order ``(path, node)`` pairs."""
    yield path, node
    if isinstance(node, Mono):
        yield from iter_nodes(node.child, path + "/child")
    elif isinstance(node, Split):
        yield from iter_nodes(node.left, path + "/left")
        yield from iter_nodes(node.right, path + "/right")


# ---------------------------------------------------------------------------
# replay


class RejectReason(enum.Enum):
    BOUND_NOT_NEGATIVE = "BoundNotNegative"
    SIGN_NOT_UNIFORM = "SignNotUniform"
    DOMAIN_NOT_CERTIFIED = "DomainNotCertified"
    STRUCTURAL_MISMATCH = "StructuralMismatch"


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    reason: Optional[RejectReason] = None
    path: Optional[str] = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.accepted

    def __str__(self) -> str:
        if self.accepted:
            return "Accept"
        return f"Reject({self.reason.value}) at {self.path}: {self.detail}"


class _Reject(Exception):
    def __init__(self, reason: RejectReason, path: str, detail: str):
        super().__init__(detail)
        self.verdict = Verdict(False, reason, path, detail)


def _leaf_center(node, box: Box, path: str) -> tuple:
    if node.center is None:
        return box.midpoint()
    if not box.contains_point(node.center):
        raise _Reject(RejectReason.STRUCTURAL_MISMATCH, path, "recorded center lies outside its box")
    return node.center


def _check_bound(expr: Expr, box: Box, center, what: str, path: str) -> None:
    try:
        tm = eval_taylor(expr, box, center)
        bound = upper_bound(tm) if tm.domain_ok else None
    except Overflow as exc:
        raise _Reject(RejectReason.BOUND_NOT_NEGATIVE, path, f"overflow in {what}: {exc}") from None
    if bound is None:
        raise _Reject(RejectReason.DOMAIN_NOT_CERTIFIED, path, f"{what} not defined on the whole box")
    if not bound < 0.0:
        raise _Reject(RejectReason.BOUND_NOT_NEGATIVE, path, f"{what} upper bound {bound!r} >= 0")


def _replay(spec: InequalitySpec, node: CertNode, box: Box, path: str) -> None:
    n = spec.dimension
    if isinstance(node, Leaf):
        if not 0 <= node.disjunct < spec.k:
            raise _Reject(RejectReason.STRUCTURAL_MISMATCH, path, f"no disjunct {node.disjunct}")
        center = _leaf_center(node, box, path)
        if not constraints_certified(spec, box):
            raise _Reject(RejectReason.DOMAIN_NOT_CERTIFIED, path, "explicit constraints not certified")
        _check_bound(spec.disjuncts[node.disjunct], box, center, f"disjunct {node.disjunct}", path)
    elif isinstance(node, LinComb):
        try:
            expr = weighted_sum(spec, node.weights)
        except ValueError as exc:
            raise _Reject(RejectReason.STRUCTURAL_MISMATCH, path, str(exc)) from None
        center = _leaf_center(node, box, path)
        if not constraints_certified(spec, box):
            raise _Reject(RejectReason.DOMAIN_NOT_CERTIFIED, path, "explicit constraints not certified")
        _check_bound(expr, box, center, "weighted sum", path)
    elif isinstance(node, Mono):
        if not 0 <= node.dim < n or box[node.dim].is_thin():
            raise _Reject(RejectReason.STRUCTURAL_MISMATCH, path, f"cannot reduce dimension {node.dim}")
        if not constraints_certified(spec, box):
            raise _Reject(RejectReason.DOMAIN_NOT_CERTIFIED, path, "explicit constraints not certified")
        want = Sign.POSITIVE if node.face is Face.UPPER else Sign.NEGATIVE
        for i, f in enumerate(spec.disjuncts):
            try:
                derivs = box_pass(f, box)
            except Overflow:
                derivs = None
            if derivs is None:
                raise _Reject(RejectReason.DOMAIN_NOT_CERTIFIED, path, f"disjunct {i} not defined on the box")
            if iv.sign_of(derivs[0][node.dim]) is not want:
                raise _Reject(
                    RejectReason.SIGN_NOT_UNIFORM,
                    path,
                    f"d(disjunct {i})/dx{node.dim} is not {want.value} on the box",
                )
        _replay(spec, node.child, face_box(box, node.dim, node.face), path + "/child")
    elif isinstance(node, Split):
        if not 0 <= node.dim < n:
            raise _Reject(RejectReason.STRUCTURAL_MISMATCH, path, f"no dimension {node.dim}")
        try:
            left, right = split_box(box, node.dim)
        except ValueError as exc:
            raise _Reject(RejectReason.STRUCTURAL_MISMATCH, path, str(exc)) from None
        _replay(spec, node.left, left, path + "/left")
        _replay(spec, node.right, right, path + "/right")
    else:
        raise _Reject(RejectReason.STRUCTURAL_MISMATCH, path, f"unknown node {node!r}")


def replay(spec: InequalitySpec, cert: Certificate | CertNode) -> Verdict:
    """Check a certificate against ``spec`` without any search."""
    root = cert.root if isinstance(cert, Certificate) else cert
    if isinstance(cert, Certificate) and cert.ineq_id != spec.id:
        return Verdict(False, RejectReason.STRUCTURAL_MISMATCH, "root",
                       f"certificate is for {cert.ineq_id!r}, not {spec.id!r}")
    try:
        _replay(spec, root, spec.domain, "root")
    except _Reject as rej:
        return rej.verdict
    return Verdict(True)
