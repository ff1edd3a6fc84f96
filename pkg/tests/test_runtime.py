import random

import pytest

from gen import random_applicable_transform, random_type
from vectx.errors import DivisibilityError, LengthMismatchError, ParseError, ShapeError
from vectx.runtime import (
    PRIMITIVES,
    ScalarI,
    TupVal,
    VecVal,
    apply_transform_value,
    conforms,
    flatten,
    from_vector,
    iv,
    parse_value,
    print_value,
    random_value,
    reshape_from,
    reshape_to,
    shape_of,
    to_vector,
    unzipt,
    vv,
    zipt,
)
from vectx.type_algebra import Atom, Pair, Vec, apply_transform, parse_transform


def ints(*ns):
    return vv(*[iv(n) for n in ns])


# -- shape_of / conforms -----------------------------------------------------


def test_shape_of_nested():
    v = vv(ints(1, 2), ints(3, 4), ints(5, 6))
    assert shape_of(v) == Vec(3, Vec(2, Atom("int")))


def test_shape_of_ragged_fails():
    with pytest.raises(ShapeError):
        shape_of(vv(ints(1, 2), ints(3)))


def test_conforms_ignores_atom_names():
    assert conforms(ints(1, 2, 3), Vec(3, Atom("a")))
    assert not conforms(ints(1, 2, 3), Vec(4, Atom("a")))
    assert conforms(TupVal(iv(1), iv(2)), Pair(Atom("a"), Atom("b")))


# -- reshape -----------------------------------------------------------------


def test_reshape_to_chunks_in_order():
    assert reshape_to(2, ints(1, 2, 3, 4, 5, 6)) == vv(
        ints(1, 2), ints(3, 4), ints(5, 6)
    )


def test_reshape_from_concatenates():
    assert reshape_from(2, vv(ints(1, 2), ints(3, 4))) == ints(1, 2, 3, 4)


def test_reshape_to_divisibility():
    with pytest.raises(DivisibilityError):
        reshape_to(4, ints(1, 2, 3))


def test_reshape_round_trip():
    rng = random.Random(5)
    for _ in range(50):
        n = rng.randint(1, 12) * 4
        v = random_value(Vec(n, Atom("a")), rng)
        assert reshape_from(4, reshape_to(4, v)) == v


def test_reshape_from_rejects_ragged():
    with pytest.raises(ShapeError):
        reshape_from(2, vv(ints(1, 2), ints(3)))


# -- to/from vector ----------------------------------------------------------


def test_to_vector_replicates():
    assert to_vector(3, iv(7)) == ints(7, 7, 7)


def test_from_vector_takes_head():
    assert from_vector(3, ints(7, 8, 9)) == iv(7)


def test_vector_round_trip():
    assert from_vector(4, to_vector(4, iv(5))) == iv(5)


def test_from_vector_empty_fails():
    with pytest.raises(ShapeError):
        from_vector(1, vv())


# -- zipt / unzipt -----------------------------------------------------------


def test_zipt_pairs_elementwise():
    assert zipt(TupVal(ints(1, 2), ints(3, 4))) == vv(
        TupVal(iv(1), iv(3)), TupVal(iv(2), iv(4))
    )


def test_unzipt_inverts_zipt():
    t = TupVal(ints(1, 2), ints(3, 4))
    assert unzipt(zipt(t)) == t


def test_zipt_length_mismatch():
    with pytest.raises(LengthMismatchError):
        zipt(TupVal(ints(1, 2), ints(3)))


def test_nested_zipt_composition():
    # map zipt . zipt over a pair of chunked vectors
    xs = vv(ints(1, 2), ints(3, 4))
    ys = vv(ints(5, 6), ints(7, 8))
    outer = zipt(TupVal(xs, ys))
    nested = VecVal(tuple(zipt(item) for item in outer.items))
    assert nested == vv(
        vv(TupVal(iv(1), iv(5)), TupVal(iv(2), iv(6))),
        vv(TupVal(iv(3), iv(7)), TupVal(iv(4), iv(8))),
    )


# -- transform mirror --------------------------------------------------------


def test_flattening_transform_on_values():
    tr = parse_transform("M ( S^-1 ) R^-1 2")
    v = vv(ints(1, 2), ints(3, 4), ints(5, 6))
    assert apply_transform_value(tr, v) == ints(1, 2, 3, 4, 5, 6)


def test_identity_transform_on_values():
    v = vv(ints(1, 2), ints(3, 4))
    assert apply_transform_value(parse_transform("I"), v) == v


def test_transform_value_tracks_type_and_preserves_order():
    rng = random.Random(17)
    for _ in range(200):
        t = random_type(rng, rng.randint(1, 48), atom="int")
        tr = random_applicable_transform(rng, t, allow_wrap=False)
        v = random_value(t, rng)
        out = apply_transform_value(tr, v)
        assert shape_of(out) == apply_transform(tr, t)
        assert flatten(out) == flatten(v)


def test_flatten_fully():
    assert flatten(vv(vv(ints(1, 2)), vv(ints(3, 4)))) == ints(1, 2, 3, 4)
    assert flatten(iv(9)) == ints(9)


# -- fold lemma as executable property ----------------------------------------


def _foldl(f, acc, items):
    for x in items:
        acc = f(acc, x)
    return acc


@pytest.mark.parametrize("prim", ["add", "max", "dec_shift"])
def test_nested_fold_equals_flat_fold(prim):
    _, f = PRIMITIVES[prim]
    rng = random.Random(29)
    for _ in range(100):
        m, k = rng.randint(1, 6), rng.randint(1, 6)
        nested = random_value(Vec(m, Vec(k, Atom("int"))), rng)
        flat = flatten(nested)
        nested_result = _foldl(
            lambda acc, chunk: _foldl(f, acc, chunk.items), iv(0), nested.items
        )
        assert nested_result == _foldl(f, iv(0), flat.items)


# -- literals ------------------------------------------------------------------


def test_print_parse_values():
    v = vv(TupVal(iv(-1), iv(2)), TupVal(iv(3), iv(4)))
    assert parse_value(print_value(v)) == v
    assert print_value(v) == "[(-1,2),(3,4)]"


def test_parse_value_rejects_garbage():
    with pytest.raises(ParseError):
        parse_value("[1,]x")
    with pytest.raises(ParseError):
        parse_value("(1)")
