import random

import pytest
from hypothesis import given

import gen
from revcalc import programs
from revcalc.analysis import explore, run
from revcalc.binding import (
    EMPTY_STORE, EPSILON, GlobalState, LocalState, Renaming, Store, equivalent,
    free_vars, lid, rename, rid,
)
from revcalc.frontend import parse
from revcalc.semantics import (
    CUMULATIVE, VERSIONED, Arbitrary, Mode, NotAProgramExpression,
    NotEnabled, StepLabel, UndefinedRead, enabled_steps, initial_state,
    is_terminal, merge_stores, reusable_fork_ids, step, weak_fork_variants,
)
from revcalc.syntax import (
    UNIT, App, Assign, Deref, Lam, Loc, Num, Ref, Rfork, Rid, Rjoin, Var,
)

P = programs.load("counterexample")


def L(e, sigma=EMPTY_STORE, tau=EMPTY_STORE):
    return LocalState(sigma, tau, e)


def test_apply():
    s = GlobalState({1: L(App(Lam(0, Var(0)), UNIT))})
    assert enabled_steps(s) == [(StepLabel(1, "apply"), GlobalState({1: L(UNIT)}))]


def test_join_merges_and_removes_joinee():
    sigma, tau = Store({0: UNIT}), Store({0: Loc(0), 1: UNIT})
    s = GlobalState({
        0: L(App(Lam(0, Var(0)), Rjoin(Rid(1))), tau=tau),
        1: L(UNIT, sigma=sigma, tau=Store({0: Num(2)})),
    })
    [(label, t)] = enabled_steps(s)
    assert label == StepLabel(0, "join")
    assert t == GlobalState({0: L(App(Lam(0, Var(0)), UNIT),
                                  tau=Store({0: Num(2), 1: UNIT}))})


def test_join_blocks_on_unfinished_joinee():
    s = GlobalState({0: L(Rjoin(Rid(1))), 1: L(Rjoin(Rid(2)))})
    assert [l.rule for l, _ in enabled_steps(s)] == ["joinEps"]
    assert enabled_steps(s)[0] == (StepLabel(1, "joinEps"), EPSILON)


def test_fork_child_gets_combined_store():
    s = GlobalState({0: L(Rfork(Deref(Loc(0))), sigma=Store({0: UNIT}), tau=Store({1: UNIT}))})
    [(label, t)] = enabled_steps(s)
    assert label == StepLabel(0, "fork", 1)
    assert t[1] == L(Deref(Loc(0)), sigma=Store({0: UNIT, 1: UNIT}))
    assert t[0].expr == Rid(1)


def test_step_errors():
    with pytest.raises(NotEnabled):
        step(EPSILON, StepLabel(0, "apply"))
    s = GlobalState({0: L(Ref(UNIT), tau=Store({3: Loc(5)}))})
    with pytest.raises(NotEnabled):
        step(s, StepLabel(0, "new", 5))
    assert step(s, StepLabel(0, "new", 4))[0].tau == Store({3: Loc(5), 4: UNIT})
    with pytest.raises(ValueError):
        StepLabel(0, "new")


def test_side_condition_modes():
    # location 5 is referenced but unbound: only relaxed ignores that
    s = GlobalState({0: L(Assign(Loc(5), UNIT))})
    assert enabled_steps(s, Mode.CONSERVATIVE) == []
    assert [l.rule for l, _ in enabled_steps(s, Mode.RELAXED)] == ["set"]
    with pytest.raises(UndefinedRead):
        enabled_steps(GlobalState({0: L(Deref(Loc(5)))}), Mode.RELAXED)
    new = GlobalState({0: L(Ref(Loc(0)))})
    assert enabled_steps(new, Mode.CONSERVATIVE)[0][0].allocated == 1
    assert enabled_steps(new, Mode.RELAXED)[0][0].allocated == 0


def test_weak_fork_may_reuse_expression_ids():
    s = GlobalState({0: L(App(Rid(1), Rfork(UNIT)))})
    assert reusable_fork_ids(s) == {1}
    [(label, _)] = enabled_steps(s, Mode.WEAK_FORK)
    assert label.allocated == 1
    assert [v.allocated for v in weak_fork_variants(s, label)] == [2]
    assert enabled_steps(s, Mode.CONSERVATIVE)[0][0].allocated == 2


def test_merge_examples():
    l7, l2 = Store({0: Num(7)}), Store({0: Num(2)})
    assert merge_stores(Store({0: Num(3)}), l7, l2, VERSIONED) == l2
    assert merge_stores(Store({0: Num(3)}), Store({0: Num(5)}), Store({0: Num(5)}),
                        CUMULATIVE) == Store({0: Num(7)})
    assert merge_stores(EMPTY_STORE, l7, EMPTY_STORE, CUMULATIVE) == l7
    # fresh location written by the joinee: falls back to the joinee's value
    assert merge_stores(EMPTY_STORE, l7, Store({1: UNIT}), CUMULATIVE) == Store({0: Num(7), 1: UNIT})


def test_initial_state():
    assert initial_state(UNIT) == GlobalState({0: L(UNIT)})
    with pytest.raises(NotAProgramExpression):
        initial_state(Rjoin(Rid(1)))
    assert initial_state(P, 1) == GlobalState({1: L(P)})


def test_counterexample_trace_replays():
    # the five-step execution of P from revision 1, reusing 2 as the last fork id
    states = [
        "(fun x -> rfork (rjoin x) ((rjoin x) (rfork unit))) #r2",
        "rfork (rjoin #r2) ((rjoin #r2) (rfork unit))",
        "#r3 ((rjoin #r2) (rfork unit))",
        "#r3 (unit (rfork unit))",
        "#r3 (unit #r2)",
    ]
    labels = [StepLabel(1, "fork", 2), StepLabel(1, "apply"), StepLabel(1, "fork", 3),
              StepLabel(1, "join"), StepLabel(1, "fork", 2)]
    s = initial_state(P, 1)
    for label, text in zip(labels, states):
        s = step(s, label, Mode.WEAK_FORK)
        assert s[1].expr == parse(text, allow_ids=True)
    assert set(s) == {1, 2, 3}
    assert s[3].expr == Rjoin(Rid(2))


def test_reused_id_is_rejected_conservatively():
    s = initial_state(P, 1)
    for label in [StepLabel(1, "fork", 2), StepLabel(1, "apply"), StepLabel(1, "fork", 3),
                  StepLabel(1, "join")]:
        s = step(s, label)
    with pytest.raises(NotEnabled):
        step(s, StepLabel(1, "fork", 2))


def test_is_terminal():
    assert is_terminal(GlobalState({0: L(UNIT)}))
    assert not is_terminal(EPSILON)
    assert not is_terminal(GlobalState({0: L(App(UNIT, UNIT))}))


def _reachable(name, limit=300):
    return explore(programs.load(name), collapse=False).states[:limit]


def test_rule_determinism_on_corpus(core):
    for name, e in core.items():
        for s in explore(e, collapse=False).states[:200]:
            labels = [l for l, _ in enabled_steps(s)]
            assert len(labels) == len(set(labels))
            assert len({l.actor for l in labels}) == len(labels)


def test_local_determinism_up_to_swap():
    for name in ("allocators", "nested_fork", "merge_locs"):
        for s in _reachable(name):
            for label, t in enabled_steps(s):
                if label.allocated is None:
                    continue
                other = label.allocated + 7 + max(rid(s) | lid(s), default=0)
                u = step(s, StepLabel(label.actor, label.rule, other))
                w = (Renaming.swap_rev if label.rule == "fork" else Renaming.swap_loc)(
                    label.allocated, other)
                assert rename(w, t) == u
                assert equivalent(t, u) is not None


def test_values_stay_closed(core):
    for name, e in core.items():
        for s in explore(e, collapse=False).states:
            for L_ in s.values():
                for v in list(L_.sigma.values()) + list(L_.tau.values()):
                    assert not free_vars(v)
                assert not free_vars(L_.expr)


def test_arbitrary_allocation_is_seeded_and_valid():
    e = programs.load("allocators")
    a = run(e, alloc=Arbitrary(3))[0]
    b = run(e, alloc=Arbitrary(3))[0]
    assert a == b
    assert a.replay()
    c = run(e, alloc=Arbitrary(4))[0]
    assert equivalent(a.final, c.final) is not None


@given(gen.states(depth=3), gen.renamings())
def test_mimicking_on_random_states(s, w):
    try:
        src = enabled_steps(s)
    except UndefinedRead:
        return
    dst = enabled_steps(rename(w, s))
    assert len(src) == len(dst)
    for label, t in src:
        moved = StepLabel(w.rev(label.actor), label.rule,
                          None if label.allocated is None else
                          (w.rev if label.rule == "fork" else w.loc)(label.allocated))
        assert step(rename(w, s), moved) == rename(w, t)


def test_versioned_is_shadowing():
    rng = random.Random(0)
    for _ in range(500):
        a, b, c = (gen.store(rng) for _ in range(3))
        got = merge_stores(a, b, c, VERSIONED)
        assert dict(got) == {**dict(b), **dict(c)}
