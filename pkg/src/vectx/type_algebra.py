"""Sized vector types and the order-preserving reshape algebra over them.

A type is either an atom, a fixed-size vector of a type, or (for pipeline
signatures) a pair.  The textual form writes sizes innermost first:
``[a]<2><3>`` is a 3-vector of 2-vectors of ``a``.

Transforms are sequences of primitive operations applied right to left:

    S        wrap in a size-1 vector
    S^-1     unwrap a size-1 vector
    M ( F )  apply transform F to the element type
    R m      move a factor m from the outer size to the inner size
    R^-1 m   move a factor m from the inner size to the outer size
    V k      wrap in a size-k vector (replication)
    V^-1 k   checked unwrap of a size-k vector
    I        identity

``S``, ``M`` and ``R`` never change the total size of a type; ``V`` does and
is excluded from the size-invariance guarantees.  Every transform built from
these operations is invertible, and any two types with the same leaf and the
same total size are connected by one (``path_between``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .errors import (
    AtomMismatchError,
    DimensionError,
    DivisibilityError,
    ParseError,
    ShapeError,
    SizeMismatchError,
    TypeMismatchError,
)

# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class Atom:
    name: str


@dataclass(frozen=True)
class Vec:
    size: int
    element: "VecType"

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"vector size must be >= 1, got {self.size}")


@dataclass(frozen=True)
class Pair:
    fst: "VecType"
    snd: "VecType"


VecType = Union[Atom, Vec, Pair]


def total_size(t: VecType) -> int:
    """Product of all sizes along the vector spine; 1 for a leaf."""
    n = 1
    while isinstance(t, Vec):
        n *= t.size
        t = t.element
    return n


def leaf_of(t: VecType) -> VecType:
    """Innermost non-vector element along the spine (atom or pair)."""
    while isinstance(t, Vec):
        t = t.element
    return t


def dims_of(t: VecType) -> tuple[int, ...]:
    """Sizes along the spine, innermost first."""
    out = []
    while isinstance(t, Vec):
        out.append(t.size)
        t = t.element
    return tuple(reversed(out))


def from_dims(leaf: VecType, dims: tuple[int, ...]) -> VecType:
    """Rebuild a spine from innermost-first sizes."""
    t = leaf
    for d in dims:
        t = Vec(d, t)
    return t


# ---------------------------------------------------------------------------
# Operations


@dataclass(frozen=True)
class Lift:
    """Singleton wrap: t becomes [t]<1>."""


@dataclass(frozen=True)
class Unlift:
    """Singleton unwrap: [t]<1> becomes t."""


@dataclass(frozen=True)
class MapElem:
    """Apply a transform to the element type of a vector."""

    inner: "Transform"


@dataclass(frozen=True)
class Regroup:
    """[[t]<n1>]<n2> becomes [[t]<n1*m>]<n2/m>."""

    m: int

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"regroup factor must be >= 1, got {self.m}")


@dataclass(frozen=True)
class RegroupInv:
    """[[t]<n1>]<n2> becomes [[t]<n1/m>]<n2*m>."""

    m: int

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"regroup factor must be >= 1, got {self.m}")


@dataclass(frozen=True)
class Ident:
    pass


@dataclass(frozen=True)
class Wrap:
    """t becomes [t]<k>; grows the total size."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"wrap size must be >= 1, got {self.k}")


@dataclass(frozen=True)
class Unwrap:
    """Checked unwrap: [t]<k> becomes t, error on any other argument."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"wrap size must be >= 1, got {self.k}")


TypeOp = Union[Lift, Unlift, MapElem, Regroup, RegroupInv, Ident, Wrap, Unwrap]


@dataclass(frozen=True)
class Transform:
    """Operation sequence in display order; the rightmost op applies first.

    The empty sequence is the identity.  Composition is concatenation:
    ``compose(f, g)`` applies ``g`` first.
    """

    ops: tuple[TypeOp, ...] = ()

    def __len__(self):
        return len(self.ops)


IDENTITY = Transform(())


def compose(after: Transform, first: Transform) -> Transform:
    return Transform(after.ops + first.ops)


def apply_op(op: TypeOp, t: VecType) -> VecType:
    """Apply one operation to a type.

    On a pair both components are transformed identically; on an atom,
    element mapping and regrouping are identities.
    """
    if isinstance(t, Pair):
        return Pair(apply_op(op, t.fst), apply_op(op, t.snd))
    if isinstance(op, Lift):
        return Vec(1, t)
    if isinstance(op, Unlift):
        if not isinstance(t, Vec) or t.size != 1:
            raise DimensionError(f"S^-1 needs a size-1 vector, got {print_type(t)}")
        return t.element
    if isinstance(op, MapElem):
        if isinstance(t, Atom):
            return t
        return Vec(t.size, apply_transform(op.inner, t.element))
    if isinstance(op, Regroup):
        if isinstance(t, Atom):
            return t
        if not isinstance(t.element, Vec):
            raise ShapeError(f"R needs a nested vector, got {print_type(t)}")
        if t.size % op.m != 0:
            raise DivisibilityError(
                f"R {op.m}: outer size {t.size} is not a multiple of {op.m}"
            )
        return Vec(t.size // op.m, Vec(t.element.size * op.m, t.element.element))
    if isinstance(op, RegroupInv):
        if isinstance(t, Atom):
            return t
        if not isinstance(t.element, Vec):
            raise ShapeError(f"R^-1 needs a nested vector, got {print_type(t)}")
        if t.element.size % op.m != 0:
            raise DivisibilityError(
                f"R^-1 {op.m}: inner size {t.element.size} is not a multiple of {op.m}"
            )
        return Vec(t.size * op.m, Vec(t.element.size // op.m, t.element.element))
    if isinstance(op, Ident):
        return t
    if isinstance(op, Wrap):
        return Vec(op.k, t)
    if isinstance(op, Unwrap):
        if not isinstance(t, Vec) or t.size != op.k:
            raise TypeMismatchError(f"V^-1 {op.k} does not apply to {print_type(t)}")
        return t.element
    raise TypeError(f"unknown operation {op!r}")


def apply_transform(tr: Transform, t: VecType) -> VecType:
    """Fold the operations over t from rightmost to leftmost."""
    for pos in range(len(tr.ops) - 1, -1, -1):
        op = tr.ops[pos]
        try:
            t = apply_op(op, t)
        except (ValueError, TypeError):
            raise
        except Exception as e:
            raise type(e)(f"op {print_op(op)} at position {pos}: {e}") from e
    return t


def invert_op(op: TypeOp) -> TypeOp:
    if isinstance(op, Lift):
        return Unlift()
    if isinstance(op, Unlift):
        return Lift()
    if isinstance(op, MapElem):
        return MapElem(invert_transform(op.inner))
    if isinstance(op, Regroup):
        return RegroupInv(op.m)
    if isinstance(op, RegroupInv):
        return Regroup(op.m)
    if isinstance(op, Ident):
        return Ident()
    if isinstance(op, Wrap):
        return Unwrap(op.k)
    if isinstance(op, Unwrap):
        return Wrap(op.k)
    raise TypeError(f"unknown operation {op!r}")


def invert_transform(tr: Transform) -> Transform:
    """Reverse the sequence and invert each operation."""
    return Transform(tuple(invert_op(op) for op in reversed(tr.ops)))


def canonicalize(t: VecType) -> tuple[Transform, VecType]:
    """Flatten a type to its 1-D form ``[leaf]<N>``.

    Returns the transform that performs the flattening together with the
    flat type.  Each round collapses the outer two dimensions: regroup the
    whole inner size outwards, then strip the resulting singleton.  A bare
    leaf is lifted to ``[leaf]<1>`` so the result is always one-dimensional.
    """
    if not isinstance(t, Vec):
        return Transform((Lift(),)), Vec(1, t)
    applied = []  # in application order
    cur = t
    while isinstance(cur.element, Vec):
        inner = cur.element.size
        applied.append(RegroupInv(inner))
        applied.append(MapElem(Transform((Unlift(),))))
        cur = Vec(cur.size * inner, cur.element.element)
    return Transform(tuple(reversed(applied))), cur


def path_between(t1: VecType, t2: VecType) -> Transform:
    """A transform carrying t1 to t2: flatten t1, then rebuild t2.

    Both types must have the same total size and the same leaf element.
    """
    if total_size(t1) != total_size(t2):
        raise SizeMismatchError(
            f"total sizes differ: {print_type(t1)} has {total_size(t1)}, "
            f"{print_type(t2)} has {total_size(t2)}"
        )
    if leaf_of(t1) != leaf_of(t2):
        raise AtomMismatchError(
            f"leaf elements differ: {print_type(leaf_of(t1))} vs {print_type(leaf_of(t2))}"
        )
    down, _ = canonicalize(t1)
    up, _ = canonicalize(t2)
    return compose(invert_transform(up), down)


# ---------------------------------------------------------------------------
# Text form


def print_type(t: VecType) -> str:
    if isinstance(t, Atom):
        return t.name
    if isinstance(t, Pair):
        return f"({print_type(t.fst)},{print_type(t.snd)})"
    sizes = []  # outermost first
    while isinstance(t, Vec):
        sizes.append(t.size)
        t = t.element
    return f"[{print_type(t)}]" + "".join(f"<{s}>" for s in reversed(sizes))


def print_op(op: TypeOp) -> str:
    if isinstance(op, Lift):
        return "S"
    if isinstance(op, Unlift):
        return "S^-1"
    if isinstance(op, MapElem):
        return f"M ( {print_transform(op.inner)} )"
    if isinstance(op, Regroup):
        return f"R {op.m}"
    if isinstance(op, RegroupInv):
        return f"R^-1 {op.m}"
    if isinstance(op, Ident):
        return "I"
    if isinstance(op, Wrap):
        return f"V {op.k}"
    if isinstance(op, Unwrap):
        return f"V^-1 {op.k}"
    raise TypeError(f"unknown operation {op!r}")


def print_transform(tr: Transform) -> str:
    if not tr.ops:
        return "I"
    return " ".join(print_op(op) for op in tr.ops)


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            raise ParseError(f"expected {ch!r}", column=self.pos + 1)
        self.pos += 1

    def at_end(self) -> bool:
        return self.peek() == ""

    def integer(self) -> int:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if self.pos == start:
            raise ParseError("expected an integer", column=start + 1)
        return int(self.text[start : self.pos])

    def identifier(self) -> str:
        self.skip_ws()
        start = self.pos
        if self.pos < len(self.text) and (
            self.text[self.pos].isalpha() or self.text[self.pos] == "_"
        ):
            self.pos += 1
            while self.pos < len(self.text) and (
                self.text[self.pos].isalnum() or self.text[self.pos] == "_"
            ):
                self.pos += 1
        if self.pos == start:
            raise ParseError("expected an identifier", column=start + 1)
        return self.text[start : self.pos]


def _parse_type(sc: _Scanner) -> VecType:
    ch = sc.peek()
    if ch == "[":
        sc.expect("[")
        elem = _parse_type(sc)
        sc.expect("]")
        if sc.peek() != "<":
            raise ParseError("expected at least one <size>", column=sc.pos + 1)
        t = elem
        while sc.peek() == "<":
            sc.expect("<")
            n = sc.integer()
            if n < 1:
                raise ParseError(f"size must be >= 1, got {n}", column=sc.pos)
            sc.expect(">")
            t = Vec(n, t)
        return t
    if ch == "(":
        sc.expect("(")
        fst = _parse_type(sc)
        sc.expect(",")
        snd = _parse_type(sc)
        sc.expect(")")
        return Pair(fst, snd)
    return Atom(sc.identifier())


def parse_type(text: str) -> VecType:
    sc = _Scanner(text)
    t = _parse_type(sc)
    if not sc.at_end():
        raise ParseError("trailing input after type", column=sc.pos + 1)
    return t


def _parse_ops(sc: _Scanner) -> list[TypeOp]:
    ops: list[TypeOp] = []
    while True:
        ch = sc.peek()
        if ch in ("", ")"):
            return ops
        name = sc.identifier()
        inverse = False
        if sc.peek() == "^":
            sc.expect("^")
            sc.skip_ws()
            if not sc.text[sc.pos :].startswith("-1"):
                raise ParseError("expected -1 after ^", column=sc.pos + 1)
            sc.pos += 2
            inverse = True
        if name == "S":
            ops.append(Unlift() if inverse else Lift())
        elif name == "I":
            if inverse:
                raise ParseError("I has no inverse marker", column=sc.pos)
            ops.append(Ident())
        elif name == "R":
            m = sc.integer()
            ops.append(RegroupInv(m) if inverse else Regroup(m))
        elif name == "V":
            k = sc.integer()
            ops.append(Unwrap(k) if inverse else Wrap(k))
        elif name == "M":
            if inverse:
                raise ParseError("write M ( F^-1 ) rather than M^-1", column=sc.pos)
            sc.expect("(")
            inner = _parse_ops(sc)
            sc.expect(")")
            ops.append(MapElem(Transform(tuple(inner))))
        else:
            raise ParseError(f"unknown operation {name!r}", column=sc.pos)


def parse_transform(text: str) -> Transform:
    sc = _Scanner(text)
    ops = _parse_ops(sc)
    if not sc.at_end():
        raise ParseError("trailing input after transform", column=sc.pos + 1)
    return Transform(tuple(ops))
