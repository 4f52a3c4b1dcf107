"""Small-step transition relation on global states.

One successor is produced per (revision, rule); the allocation policy picks
the fresh identifier for ``new`` and ``fork``.  Replaying a recorded label
with :func:`step` fixes the allocated identifier instead.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, replace
from typing import Callable, FrozenSet, List, Optional, Tuple, Union

from .binding import (
    EMPTY_STORE, EPSILON, GlobalState, LocalState, Store, lid, rid, subst,
)
from .syntax import (
    Add, App, Assign, Const, Deref, Expr, Ite, Lam, Loc, Num, Ref, Rfork,
    Rid, Rjoin, UNIT, Val, decompose, plug,
)


class Mode(enum.Enum):
    """How the side conditions of the rules are read.

    CONSERVATIVE: ``new`` avoids every location of the state, ``fork``
    avoids every revision of the state, ``get``/``set`` need a binding.
    RELAXED: ``new`` avoids only the store domains; ``get``/``set`` have no
    side condition.  WEAK_FORK: ``fork`` avoids only the domain and the
    stores, which lets a fork reuse an identifier still held by an
    expression.
    """

    CONSERVATIVE = "conservative"
    RELAXED = "relaxed"
    WEAK_FORK = "weak-fork"


@dataclass(frozen=True)
class CanonicalLowest:
    pass


@dataclass(frozen=True)
class Arbitrary:
    seed: int
    window: int = 6


AllocPolicy = Union[CanonicalLowest, Arbitrary]
CANONICAL = CanonicalLowest()


@dataclass(frozen=True)
class Versioned:
    pass


@dataclass(frozen=True)
class Custom:
    """Per-location merge ``fn(snapshot_val, joiner_val, joinee_val)``.

    ``fn`` must be a module-level function (it is pickled for parallel
    exploration) and must not look at identifier numerals.
    """

    fn: Callable[[Val, Val, Val], Val]
    name: str = "custom"


MergePolicy = Union[Versioned, Custom]
VERSIONED = Versioned()

RULES = ("apply", "ifTrue", "ifFalse", "new", "get", "set", "fork", "join", "joinEps")
EXTENSION_RULES = ("add",)
ALLOCATING = frozenset(("new", "fork"))


@dataclass(frozen=True, order=True)
class StepLabel:
    actor: int
    rule: str
    allocated: Optional[int] = None

    def __post_init__(self):
        if (self.allocated is not None) != (self.rule in ALLOCATING):
            raise ValueError(f"allocated id present iff rule allocates: {self}")

    def __str__(self):
        extra = "" if self.allocated is None else f"({self.allocated})"
        return f"r{self.actor}:{self.rule}{extra}"


class NotEnabled(Exception):
    pass


class NotAProgramExpression(ValueError):
    pass


class UndefinedRead(Exception):
    """A relaxed-mode ``get`` of a location that has no binding."""


# ---------------------------------------------------------------------------
# Merge


def merge_stores(snapshot: Store, joiner: Store, joinee_tau: Store,
                 policy: MergePolicy = VERSIONED) -> Store:
    """New local store of the joiner after joining.

    ``snapshot`` is the joinee's snapshot, which is the store at the common
    ancestor; the joinee's local store holds exactly the locations it wrote.
    """
    if isinstance(policy, Versioned):
        return joiner.shadow(joinee_tau)
    out = dict(joiner)
    for l, v in joinee_tau.items():
        if l in snapshot and l in joiner:
            out[l] = policy.fn(snapshot[l], joiner[l], v)
        else:
            out[l] = v
    return Store(out)


def cumulative(base: Val, mine: Val, theirs: Val) -> Val:
    """Additive reconciliation for integer cells; joinee wins otherwise."""
    if isinstance(base, Num) and isinstance(mine, Num) and isinstance(theirs, Num):
        return Num(mine.value + theirs.value - base.value)
    return theirs


def identifier_sensitive(base: Val, mine: Val, theirs: Val) -> Val:
    """Deliberately broken merge that prefers the lower location numeral."""
    if isinstance(mine, Loc) and isinstance(theirs, Loc):
        return mine if mine.id < theirs.id else theirs
    return theirs


CUMULATIVE = Custom(cumulative, "cumulative")
ID_SENSITIVE = Custom(identifier_sensitive, "id-sensitive")


# ---------------------------------------------------------------------------
# Side conditions and allocation


def forbidden_locations(s: GlobalState, mode: Mode) -> FrozenSet[int]:
    if mode is Mode.RELAXED:
        return frozenset().union(*(L.doms() for L in s.values()))
    return lid(s)


def forbidden_revisions(s: GlobalState, mode: Mode) -> FrozenSet[int]:
    if mode is Mode.WEAK_FORK:
        stores = (rid(L.sigma) | rid(L.tau) for L in s.values())
        return frozenset(s).union(*stores)
    return rid(s)


def reusable_fork_ids(s: GlobalState) -> FrozenSet[int]:
    """Identifiers a weak-fork step may take that a conservative fork may not."""
    return rid(s) - forbidden_revisions(s, Mode.WEAK_FORK)


def _lowest_free(forbidden: FrozenSet[int]) -> int:
    i = 0
    while i in forbidden:
        i += 1
    return i


def _allocate(s: GlobalState, forbidden: FrozenSet[int], alloc: AllocPolicy,
              actor: int, rule: str) -> int:
    if isinstance(alloc, CanonicalLowest):
        return _lowest_free(forbidden)
    seen = rid(s) | lid(s) | forbidden
    top = max(seen, default=-1) + 1 + alloc.window
    cands = [i for i in range(top) if i not in forbidden]
    rng = random.Random(f"{alloc.seed}|{actor}|{rule}|{s!r}")
    return rng.choice(cands)


# ---------------------------------------------------------------------------
# Rules


def _fire(s: GlobalState, r: int, mode: Mode, alloc: AllocPolicy,
          merge: MergePolicy, forced: Optional[int] = None
          ) -> Optional[Tuple[StepLabel, GlobalState]]:
    L = s[r]
    split = decompose(L.expr)
    if split is None:
        return None
    ctx, redex = split
    sigma, tau = L.sigma, L.tau

    def local(rule: str, e: Expr, new_tau: Store = tau, allocated=None):
        return (StepLabel(r, rule, allocated),
                s.set(r, LocalState(sigma, new_tau, plug(ctx, e))))

    match redex:
        case App(Lam(x, body), v):
            return local("apply", subst(body, x, v))
        case Ite(Const("true"), e1, _):
            return local("ifTrue", e1)
        case Ite(Const("false"), _, e2):
            return local("ifFalse", e2)
        case Ref(v):
            bad = forbidden_locations(s, mode)
            l = forced if forced is not None else _allocate(s, bad, alloc, r, "new")
            if l in bad:
                raise NotEnabled(f"location {l} violates the side condition of new")
            return local("new", Loc(l), tau.set(l, v), allocated=l)
        case Deref(Loc(l)):
            visible = sigma.shadow(tau)
            if l in visible:
                return local("get", visible[l])
            if mode is Mode.RELAXED:
                raise UndefinedRead(f"revision {r} reads unbound location {l}")
            return None
        case Assign(Loc(l), v):
            if mode is not Mode.RELAXED and l not in sigma and l not in tau:
                return None
            return local("set", UNIT, tau.set(l, v))
        case Rfork(e):
            bad = forbidden_revisions(s, mode)
            r2 = forced if forced is not None else _allocate(s, bad, alloc, r, "fork")
            if r2 in bad:
                raise NotEnabled(f"revision {r2} violates the side condition of fork")
            child = LocalState(sigma.shadow(tau), EMPTY_STORE, e)
            parent = LocalState(sigma, tau, plug(ctx, Rid(r2)))
            return StepLabel(r, "fork", r2), s.set(r, parent).set(r2, child)
        case Rjoin(Rid(r2)):
            if r2 not in s:
                return StepLabel(r, "joinEps"), EPSILON
            joinee = s[r2]
            if not isinstance(joinee.expr, Val):
                return None
            merged = merge_stores(joinee.sigma, tau, joinee.tau, merge)
            after = LocalState(sigma, merged, plug(ctx, UNIT))
            return StepLabel(r, "join"), s.delete(r2).set(r, after)
        case Add(Num(a), Num(b)):
            return local("add", Num(a + b))
    raise AssertionError(f"unhandled redex {redex!r}")


def enabled_steps(s: GlobalState, mode: Mode = Mode.CONSERVATIVE,
                  alloc: AllocPolicy = CANONICAL,
                  merge: MergePolicy = VERSIONED) -> List[Tuple[StepLabel, GlobalState]]:
    """All labelled successors of ``s``, ordered by acting revision.

    An empty list means ``s`` is maximal.
    """
    out = []
    for r in s:
        fired = _fire(s, r, mode, alloc, merge)
        if fired is not None:
            out.append(fired)
    return out


def step(s: GlobalState, label: StepLabel, mode: Mode = Mode.CONSERVATIVE,
         alloc: AllocPolicy = CANONICAL,
         merge: MergePolicy = VERSIONED) -> GlobalState:
    """Replay ``label`` on ``s``; the label's allocated id overrides ``alloc``."""
    if label.actor not in s:
        raise NotEnabled(f"revision {label.actor} does not exist")
    fired = _fire(s, label.actor, mode, alloc, merge, forced=label.allocated)
    if fired is None or fired[0].rule != label.rule:
        raise NotEnabled(f"{label} is not enabled")
    return fired[1]


def weak_fork_variants(s: GlobalState, label: StepLabel) -> List[StepLabel]:
    """Alternative allocations for a weak-fork ``fork`` step.

    Besides the canonical choice, these are every reusable identifier and the
    lowest identifier that a conservative fork would pick.
    """
    if label.rule != "fork":
        return []
    ids = set(reusable_fork_ids(s))
    ids.add(_lowest_free(forbidden_revisions(s, Mode.CONSERVATIVE)))
    ids.discard(label.allocated)
    return [replace(label, allocated=i) for i in sorted(ids)]


def initial_state(e: Expr, r: int = 0) -> GlobalState:
    if rid(e) or lid(e):
        raise NotAProgramExpression("program expressions contain no revision or location identifiers")
    return GlobalState({r: LocalState(EMPTY_STORE, EMPTY_STORE, e)})


def is_terminal(s: GlobalState) -> bool:
    """Every revision has reduced to a value (epsilon excluded)."""
    return bool(s) and all(isinstance(L.expr, Val) for L in s.values())


__all__ = [
    "Mode", "CanonicalLowest", "Arbitrary", "AllocPolicy", "CANONICAL",
    "Versioned", "Custom", "MergePolicy", "VERSIONED", "CUMULATIVE",
    "ID_SENSITIVE", "cumulative", "identifier_sensitive", "RULES",
    "EXTENSION_RULES", "StepLabel", "NotEnabled", "NotAProgramExpression",
    "UndefinedRead", "merge_stores", "forbidden_locations",
    "forbidden_revisions", "reusable_fork_ids", "enabled_steps", "step",
    "weak_fork_variants", "initial_state", "is_terminal",
]
