"""Nested vector values, runtime combinators, and the reference interpreter.

Values mirror types: integer scalars for atoms, tuples for pairs, and
uniformly shaped sequences for vectors.  Everything here is a pure function
over immutable values, and all comparisons are exact — scalars are plain
integers, so semantic-preservation checks are bit-exact.

The combinators are the value-level counterparts of the type operations:
``reshape_to``/``reshape_from`` re-chunk a vector without touching element
order, ``to_vector``/``from_vector`` replicate and project, and
``zipt``/``unzipt`` convert between a pair of vectors and a vector of pairs.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Union

from .errors import (
    DimensionError,
    DivisibilityError,
    LengthMismatchError,
    MissingPrimitiveError,
    ParseError,
    ShapeError,
    TypeMismatchError,
)
from .type_algebra import (
    Atom,
    Ident,
    Lift,
    MapElem,
    Pair,
    Regroup,
    RegroupInv,
    Transform,
    Unlift,
    Unwrap,
    Vec,
    VecType,
    Wrap,
    print_type,
)

# ---------------------------------------------------------------------------
# Values


@dataclass(frozen=True)
class ScalarI:
    value: int


@dataclass(frozen=True)
class VecVal:
    items: tuple["Value", ...]

    def __len__(self):
        return len(self.items)


@dataclass(frozen=True)
class TupVal:
    fst: "Value"
    snd: "Value"


Value = Union[ScalarI, VecVal, TupVal]


def iv(n: int) -> ScalarI:
    return ScalarI(n)


def vv(*items: Value) -> VecVal:
    return VecVal(tuple(items))


def shape_of(v: Value) -> VecType:
    """The type a value inhabits; scalar atoms are reported as ``int``."""
    if isinstance(v, ScalarI):
        return Atom("int")
    if isinstance(v, TupVal):
        return Pair(shape_of(v.fst), shape_of(v.snd))
    if not v.items:
        raise ShapeError("empty vector has no shape")
    first = shape_of(v.items[0])
    for item in v.items[1:]:
        if shape_of(item) != first:
            raise ShapeError("ragged vector: elements differ in shape")
    return Vec(len(v.items), first)


def conforms(v: Value, t: VecType) -> bool:
    """Structural match of a value against a type; any atom admits a scalar."""
    if isinstance(t, Atom):
        return isinstance(v, ScalarI)
    if isinstance(t, Pair):
        return (
            isinstance(v, TupVal)
            and conforms(v.fst, t.fst)
            and conforms(v.snd, t.snd)
        )
    return (
        isinstance(v, VecVal)
        and len(v.items) == t.size
        and all(conforms(item, t.element) for item in v.items)
    )


def random_value(t: VecType, rng: random.Random, lo: int = -99, hi: int = 99) -> Value:
    if isinstance(t, Atom):
        return ScalarI(rng.randint(lo, hi))
    if isinstance(t, Pair):
        return TupVal(random_value(t.fst, rng, lo, hi), random_value(t.snd, rng, lo, hi))
    return VecVal(tuple(random_value(t.element, rng, lo, hi) for _ in range(t.size)))


# ---------------------------------------------------------------------------
# Combinators


def reshape_to(k: int, v: Value) -> Value:
    """Chunk a vector into groups of k, preserving element order."""
    if isinstance(v, TupVal):
        return TupVal(reshape_to(k, v.fst), reshape_to(k, v.snd))
    if not isinstance(v, VecVal):
        raise ShapeError("reshapeTo needs a vector")
    if len(v.items) % k != 0:
        raise DivisibilityError(f"reshapeTo {k}: length {len(v.items)} not divisible")
    return VecVal(
        tuple(VecVal(v.items[i : i + k]) for i in range(0, len(v.items), k))
    )


def reshape_from(k: int, v: Value) -> Value:
    """Concatenate uniform chunks of length k back into a flat vector."""
    if isinstance(v, TupVal):
        return TupVal(reshape_from(k, v.fst), reshape_from(k, v.snd))
    if not isinstance(v, VecVal):
        raise ShapeError("reshapeFrom needs a vector")
    out = []
    for chunk in v.items:
        if not isinstance(chunk, VecVal) or len(chunk.items) != k:
            raise ShapeError(f"reshapeFrom {k}: inner chunks must have length {k}")
        out.extend(chunk.items)
    return VecVal(tuple(out))


def to_vector(k: int, v: Value) -> VecVal:
    """k copies of v."""
    return VecVal((v,) * k)


def from_vector(k: int, v: Value) -> Value:
    """Head of a non-empty vector (k is not inspected)."""
    if not isinstance(v, VecVal) or not v.items:
        raise ShapeError("fromVector needs a non-empty vector")
    return v.items[0]


def zipt(v: Value) -> VecVal:
    """Pair of equal-length vectors -> vector of pairs."""
    if not isinstance(v, TupVal) or not isinstance(v.fst, VecVal) or not isinstance(v.snd, VecVal):
        raise ShapeError("zipt needs a pair of vectors")
    if len(v.fst.items) != len(v.snd.items):
        raise LengthMismatchError(
            f"zipt: lengths {len(v.fst.items)} and {len(v.snd.items)} differ"
        )
    return VecVal(tuple(TupVal(x, y) for x, y in zip(v.fst.items, v.snd.items)))


def unzipt(v: Value) -> TupVal:
    """Vector of pairs -> pair of vectors."""
    if not isinstance(v, VecVal):
        raise ShapeError("unzipt needs a vector of pairs")
    firsts, seconds = [], []
    for item in v.items:
        if not isinstance(item, TupVal):
            raise ShapeError("unzipt needs a vector of pairs")
        firsts.append(item.fst)
        seconds.append(item.snd)
    return TupVal(VecVal(tuple(firsts)), VecVal(tuple(seconds)))


def flatten(v: Value) -> VecVal:
    """Fully flatten nested vectors into the 1-D sequence of their leaves."""
    if not isinstance(v, VecVal):
        return VecVal((v,))
    out = []
    for item in v.items:
        if isinstance(item, VecVal):
            out.extend(flatten(item).items)
        else:
            out.append(item)
    return VecVal(tuple(out))


def apply_transform_value(tr: Transform, v: Value) -> Value:
    """Value-level mirror of ``apply_transform``: reshapes only, never
    reorders; the fully flattened element sequence is preserved by every
    operation except replication/projection (``V k`` and its inverse)."""
    for pos in range(len(tr.ops) - 1, -1, -1):
        v = _apply_op_value(tr.ops[pos], v)
    return v


def _apply_op_value(op, v: Value) -> Value:
    if isinstance(v, TupVal):
        return TupVal(_apply_op_value(op, v.fst), _apply_op_value(op, v.snd))
    if isinstance(op, Lift):
        return VecVal((v,))
    if isinstance(op, Unlift):
        if not isinstance(v, VecVal) or len(v.items) != 1:
            raise DimensionError("S^-1 needs a one-element vector")
        return v.items[0]
    if isinstance(op, MapElem):
        if isinstance(v, ScalarI):
            return v
        return VecVal(tuple(apply_transform_value(op.inner, item) for item in v.items))
    if isinstance(op, Regroup):
        if isinstance(v, ScalarI):
            return v
        if len(v.items) % op.m != 0:
            raise DivisibilityError(f"R {op.m}: outer length {len(v.items)} not divisible")
        merged = []
        for i in range(0, len(v.items), op.m):
            group = []
            for chunk in v.items[i : i + op.m]:
                if not isinstance(chunk, VecVal):
                    raise ShapeError("R needs a nested vector value")
                group.extend(chunk.items)
            merged.append(VecVal(tuple(group)))
        return VecVal(tuple(merged))
    if isinstance(op, RegroupInv):
        if isinstance(v, ScalarI):
            return v
        split = []
        for chunk in v.items:
            if not isinstance(chunk, VecVal):
                raise ShapeError("R^-1 needs a nested vector value")
            if len(chunk.items) % op.m != 0:
                raise DivisibilityError(
                    f"R^-1 {op.m}: inner length {len(chunk.items)} not divisible"
                )
            width = len(chunk.items) // op.m
            for i in range(0, len(chunk.items), width):
                split.append(VecVal(chunk.items[i : i + width]))
        return VecVal(tuple(split))
    if isinstance(op, Ident):
        return v
    if isinstance(op, Wrap):
        return to_vector(op.k, v)
    if isinstance(op, Unwrap):
        if not isinstance(v, VecVal) or len(v.items) != op.k:
            raise TypeMismatchError(f"V^-1 {op.k} does not apply to this value")
        return v.items[0]
    raise TypeError(f"unknown operation {op!r}")


# ---------------------------------------------------------------------------
# Value literals


def print_value(v: Value) -> str:
    if isinstance(v, ScalarI):
        return str(v.value)
    if isinstance(v, TupVal):
        return f"({print_value(v.fst)},{print_value(v.snd)})"
    return "[" + ",".join(print_value(item) for item in v.items) + "]"


def parse_value(text: str) -> Value:
    v, pos = _parse_value(text, 0)
    while pos < len(text) and text[pos].isspace():
        pos += 1
    if pos != len(text):
        raise ParseError("trailing input after value", column=pos + 1)
    return v


def _parse_value(text: str, pos: int) -> tuple[Value, int]:
    while pos < len(text) and text[pos].isspace():
        pos += 1
    if pos >= len(text):
        raise ParseError("expected a value", column=pos + 1)
    ch = text[pos]
    if ch == "[":
        pos += 1
        items = []
        while True:
            while pos < len(text) and text[pos].isspace():
                pos += 1
            if pos < len(text) and text[pos] == "]":
                return VecVal(tuple(items)), pos + 1
            item, pos = _parse_value(text, pos)
            items.append(item)
            while pos < len(text) and text[pos].isspace():
                pos += 1
            if pos < len(text) and text[pos] == ",":
                pos += 1
            elif pos < len(text) and text[pos] == "]":
                return VecVal(tuple(items)), pos + 1
            else:
                raise ParseError("expected , or ] in vector literal", column=pos + 1)
    if ch == "(":
        fst, pos = _parse_value(text, pos + 1)
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text) or text[pos] != ",":
            raise ParseError("expected , in pair literal", column=pos + 1)
        snd, pos = _parse_value(text, pos + 1)
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text) or text[pos] != ")":
            raise ParseError("expected ) in pair literal", column=pos + 1)
        return TupVal(fst, snd), pos + 1
    start = pos
    if ch == "-":
        pos += 1
    while pos < len(text) and text[pos].isdigit():
        pos += 1
    if pos == start or text[start:pos] == "-":
        raise ParseError(f"unexpected character {ch!r} in value", column=start + 1)
    return ScalarI(int(text[start:pos])), pos


# ---------------------------------------------------------------------------
# Primitive library


def _scalar(v: Value) -> int:
    if not isinstance(v, ScalarI):
        raise ShapeError("primitive expected a scalar argument")
    return v.value


def _vec(v: Value) -> VecVal:
    if not isinstance(v, VecVal):
        raise ShapeError("primitive expected a vector argument")
    return v


def _tup(v: Value) -> TupVal:
    if not isinstance(v, TupVal):
        raise ShapeError("primitive expected a pair argument")
    return v


def _p_add1(x):
    return ScalarI(_scalar(x) + 1)


def _p_mul3(x):
    return ScalarI(_scalar(x) * 3)


def _p_negate(x):
    return ScalarI(-_scalar(x))


def _p_add(acc, x):
    return ScalarI(_scalar(acc) + _scalar(x))


def _p_mul(acc, x):
    return ScalarI(_scalar(acc) * _scalar(x))


def _p_max(acc, x):
    return ScalarI(max(_scalar(acc), _scalar(x)))


def _p_dec_shift(acc, x):
    # Non-commutative on purpose: order bugs change the result.
    return ScalarI(10 * _scalar(acc) + _scalar(x))


def _p_sum(xs):
    return ScalarI(sum(_scalar(x) for x in _vec(xs).items))


def _p_reverse(xs):
    return VecVal(tuple(reversed(_vec(xs).items)))


def _p_swap(t):
    t = _tup(t)
    return TupVal(t.snd, t.fst)


def _p_add_head(acc, chunk):
    # Chunk-sensitive fold step: only the head of each chunk contributes.
    chunk = _vec(chunk)
    if not chunk.items:
        raise ShapeError("add_head needs a non-empty chunk")
    return ScalarI(_scalar(acc) + _scalar(chunk.items[0]))


def _p_zipt(t):
    return zipt(t)


def _p_unzipt(xs):
    return unzipt(xs)


PRIMITIVES: dict[str, tuple[int, Callable[..., Value]]] = {
    "add1": (1, _p_add1),
    "mul3": (1, _p_mul3),
    "negate": (1, _p_negate),
    "add": (2, _p_add),
    "mul": (2, _p_mul),
    "max": (2, _p_max),
    "dec_shift": (2, _p_dec_shift),
    "sum": (1, _p_sum),
    "reverse": (1, _p_reverse),
    "swap": (1, _p_swap),
    "add_head": (2, _p_add_head),
    "zipt": (1, _p_zipt),
    "unzipt": (1, _p_unzipt),
}


# ---------------------------------------------------------------------------
# Interpreter


def call_fn(fn, args: list[Value], fns, env=None) -> Value:
    """Execute a named function given the program's function table."""
    from .program_ir import ElementwiseDef, FoldOfDef, PrimDef, WrapElemDef, WrapFoldDef

    env = PRIMITIVES if env is None else env
    if fn.defn is None:
        raise MissingPrimitiveError(f"function {fn.name} has no executable body")
    d = fn.defn
    if isinstance(d, PrimDef):
        if d.prim not in env:
            raise MissingPrimitiveError(f"unknown primitive {d.prim!r}")
        arity, impl = env[d.prim]
        if arity != len(args):
            raise ShapeError(
                f"primitive {d.prim} takes {arity} arguments, got {len(args)}"
            )
        return impl(*args)
    if isinstance(d, ElementwiseDef):
        (xs,) = args
        inner = fns[d.fn]
        return VecVal(tuple(call_fn(inner, [x], fns, env) for x in _vec(xs).items))
    if isinstance(d, FoldOfDef):
        acc, xs = args
        inner = fns[d.fn]
        for x in _vec(xs).items:
            acc = call_fn(inner, [acc, x], fns, env)
        return acc
    if isinstance(d, WrapElemDef):
        (x,) = args
        inner = fns[d.fn]
        return from_vector(d.k, call_fn(inner, [to_vector(d.k, x)], fns, env))
    if isinstance(d, WrapFoldDef):
        acc, x = args
        inner = fns[d.fn]
        return call_fn(inner, [acc, to_vector(d.k, x)], fns, env)
    raise TypeError(f"unknown definition {d!r}")


def run_stage(stage, v: Value, fns, env=None) -> Value:
    from .program_ir import (
        ComposedStage,
        FoldStage,
        MapStage,
        ReshapeFromStage,
        ReshapeToStage,
        UnziptStage,
        ZiptStage,
    )

    if isinstance(stage, MapStage):
        fn = fns[stage.fn]
        return VecVal(tuple(call_fn(fn, [x], fns, env) for x in _vec(v).items))
    if isinstance(stage, FoldStage):
        fn = fns[stage.fn]
        acc = stage.acc
        for x in _vec(v).items:
            acc = call_fn(fn, [acc, x], fns, env)
        return acc
    if isinstance(stage, ZiptStage):
        return zipt(v)
    if isinstance(stage, UnziptStage):
        return unzipt(v)
    if isinstance(stage, ReshapeToStage):
        return reshape_to(stage.k, v)
    if isinstance(stage, ReshapeFromStage):
        return reshape_from(stage.k, v)
    if isinstance(stage, ComposedStage):
        for sub in stage.stages:
            v = run_stage(sub, v, fns, env)
        return v
    raise TypeError(f"unknown stage {stage!r}")


def eval_program(program, v: Value, env=None) -> Value:
    """Run a pipeline on an input value; the semantic oracle for derivations."""
    if not conforms(v, program.input_type):
        raise ShapeError(
            f"input value does not conform to {print_type(program.input_type)}"
        )
    for _, stage in program.stages:
        v = run_stage(stage, v, program.fns, env)
    return v
