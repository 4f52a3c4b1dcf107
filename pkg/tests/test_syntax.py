import pytest
from hypothesis import given

import gen
from oracles import all_splits
from revcalc.frontend import parse
from revcalc.syntax import (
    FALSE, HOLE, TRUE, UNIT, App, AppL, Assign, Const, Deref, Ite, Lam, Loc,
    Ref, Rfork, Rid, Rjoin, RjoinC, Val, Var, decompose, is_redex, plug, size,
    subterms,
)

ID = Lam(0, Var(0))
ID_Y = Lam(1, Var(1))


def test_constants():
    assert {UNIT.name, TRUE.name, FALSE.name} == {"unit", "true", "false"}
    with pytest.raises(ValueError):
        Const("nil")


def test_values_are_expressions():
    assert isinstance(ID, Val)
    assert not isinstance(App(ID, UNIT), Val)


def test_plug_examples():
    assert plug(HOLE, UNIT) == UNIT
    left = App(ID, Var(0))
    right = App(ID_Y, Var(1))
    assert plug(AppL(HOLE, right), left) == App(left, right)
    assert plug(RjoinC(HOLE), Rfork(UNIT)) == Rjoin(Rfork(UNIT))
    assert decompose(Rjoin(Rfork(UNIT))) == (RjoinC(HOLE), Rfork(UNIT))


def test_is_redex_examples():
    assert is_redex(App(ID, UNIT))
    assert not is_redex(Var(0))
    assert not is_redex(App(App(ID, Var(0)), App(ID_Y, Var(1))))
    assert is_redex(Ite(TRUE, UNIT, UNIT)) and is_redex(Ite(FALSE, UNIT, UNIT))
    assert not is_redex(Ite(UNIT, UNIT, UNIT))
    assert is_redex(Deref(Loc(0))) and not is_redex(Deref(Rid(0)))
    assert is_redex(Assign(Loc(0), UNIT)) and not is_redex(Assign(Loc(0), Ref(UNIT)))


def test_decompose_examples():
    left = App(ID, Var(0))
    right = App(ID_Y, Var(1))
    assert decompose(App(left, right)) == (AppL(HOLE, right), left)
    assert decompose(UNIT) is None
    e = Rjoin(App(ID, Rid(1)))
    assert decompose(e) == (RjoinC(HOLE), App(ID, Rid(1)))
    # rjoin of a non-identifier value is a stuck normal form
    assert decompose(Rjoin(UNIT)) is None
    assert decompose(App(TRUE, UNIT)) is None


def test_decompose_handles_deep_nesting():
    e = UNIT
    for _ in range(200):
        e = Ref(e)
    ctx, r = decompose(e)
    assert r == Ref(UNIT) and plug(ctx, r) == e


def test_parse_sugar_decomposes_left_to_right():
    e = parse("(fun x -> x) ((fun y -> y) unit)")
    ctx, r = decompose(e)
    assert r == App(Lam(1, Var(1)), UNIT)


@given(gen.exprs(depth=6))
def test_round_trip_and_uniqueness(e):
    got = decompose(e)
    redex_splits = [(c, r) for c, r in all_splits(e) if is_redex(r)]
    assert len(redex_splits) <= 1
    if got is None:
        assert redex_splits == []
    else:
        assert plug(*got) == e
        assert redex_splits == [got]


@given(gen.contexts(), gen.redexes())
def test_plugged_redex_not_val(ctx, r):
    e = plug(ctx, r)
    assert not isinstance(e, Val)
    assert decompose(e) == (ctx, r)


@given(gen.exprs())
def test_values_do_not_decompose(e):
    if isinstance(e, Val):
        assert decompose(e) is None


def test_subterms_and_size():
    e = App(ID, UNIT)
    assert list(subterms(e)) == [e, ID, Var(0), UNIT]
    assert size(e) == 4
