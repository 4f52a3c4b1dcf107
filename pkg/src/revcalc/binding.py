"""Stores, states, identifier occurrences, substitution and renaming.

Identifiers are naturals.  ``Loc(n)``/``Rid(n)`` are their value forms inside
expressions; store and global-state keys are the bare naturals.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, Iterator, Optional, Set, Tuple

from .syntax import (
    Add, AddL, AddR, App, AppL, AppR, Assign, AssignL, AssignR, Const,
    Context, Deref, DerefC, Expr, Hole, Ite, IteC, Lam, Loc, Num, Ref, RefC,
    Rfork, Rid, Rjoin, RjoinC, Var, _node,
)


class FrozenMap(Mapping):
    """Immutable, hashable mapping.  Iteration is in sorted key order."""

    __slots__ = ("_d", "_hash")

    def __init__(self, items=()):
        d = dict(items)
        self._d = {k: d[k] for k in sorted(d)}
        self._hash = None

    def __getitem__(self, k):
        return self._d[k]

    def __iter__(self):
        return iter(self._d)

    def __len__(self):
        return len(self._d)

    def __contains__(self, k):
        return k in self._d

    def get(self, k, default=None):
        return self._d.get(k, default)

    def keys(self):
        return self._d.keys()

    def values(self):
        return self._d.values()

    def items(self):
        return self._d.items()

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((type(self).__name__, tuple(self._d.items())))
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if type(other) is not type(self):
            return NotImplemented
        return hash(self) == hash(other) and self._d == other._d

    def __repr__(self):
        return f"{type(self).__name__}({self._d!r})"

    def set(self, k, v):
        d = dict(self._d)
        d[k] = v
        return type(self)(d)

    def delete(self, k):
        d = dict(self._d)
        del d[k]
        return type(self)(d)

    def shadow(self, other):
        """``self :: other``: bindings of ``other`` win."""
        if not other:
            return self
        d = dict(self._d)
        d.update(other._d)
        return type(self)(d)

    def __reduce__(self):
        return (type(self), (tuple(self._d.items()),))


class Store(FrozenMap):
    """Finite partial map LocId -> Val."""

    __slots__ = ()


EMPTY_STORE = Store()


@_node
class LocalState:
    sigma: Store
    tau: Store
    expr: Expr

    def doms(self) -> Set[int]:
        return set(self.sigma) | set(self.tau)


class GlobalState(FrozenMap):
    """Finite partial map RevId -> LocalState.  The empty map is epsilon."""

    __slots__ = ()


EPSILON = GlobalState()


# ---------------------------------------------------------------------------
# Occurrences


@lru_cache(maxsize=1 << 16)
def _ids(n) -> Tuple[FrozenSet[int], FrozenSet[int]]:
    if isinstance(n, Rid):
        return frozenset((n.id,)), frozenset()
    if isinstance(n, Loc):
        return frozenset(), frozenset((n.id,))
    if isinstance(n, (Const, Var, Num, Hole)):
        return frozenset(), frozenset()
    rs: Set[int] = set()
    ls: Set[int] = set()
    for c in _kids(n):
        r, l = _ids(c)
        rs |= r
        ls |= l
    return frozenset(rs), frozenset(ls)


def _kids(n):
    match n:
        case Lam(_, body):
            return (body,)
        case App(a, b) | Assign(a, b) | Add(a, b):
            return (a, b)
        case Ite(a, b, c):
            return (a, b, c)
        case Ref(a) | Deref(a) | Rfork(a) | Rjoin(a):
            return (a,)
        case AppL(c, a) | AssignL(c, a) | AddL(c, a):
            return (c, a)
        case AppR(v, c) | AssignR(v, c) | AddR(v, c):
            return (v, c)
        case IteC(c, a, b):
            return (c, a, b)
        case RefC(c) | DerefC(c) | RjoinC(c):
            return (c,)
    raise TypeError(f"no identifier structure for {n!r}")


def rid(x) -> FrozenSet[int]:
    """Revision identifiers occurring in an expression, context or state."""
    if isinstance(x, (Expr, Context)):
        return _ids(x)[0]
    if isinstance(x, Store):
        return frozenset().union(*(rid(v) for v in x.values()))
    if isinstance(x, LocalState):
        return rid(x.sigma) | rid(x.tau) | rid(x.expr)
    if isinstance(x, GlobalState):
        return frozenset(x).union(*(rid(L) for L in x.values()))
    raise TypeError(f"rid: unsupported {type(x).__name__}")


def lid(x) -> FrozenSet[int]:
    """Location identifiers occurring in an expression, context or state.

    Store domains count as occurrences; global-state domains (revisions) do
    not contribute locations.
    """
    if isinstance(x, (Expr, Context)):
        return _ids(x)[1]
    if isinstance(x, Store):
        return frozenset(x).union(*(lid(v) for v in x.values()))
    if isinstance(x, LocalState):
        return lid(x.sigma) | lid(x.tau) | lid(x.expr)
    if isinstance(x, GlobalState):
        return frozenset().union(*(lid(L) for L in x.values()))
    raise TypeError(f"lid: unsupported {type(x).__name__}")


# ---------------------------------------------------------------------------
# Variables and substitution


def variables(e: Expr) -> Set[int]:
    """All variables of ``e``, free and bound (binders included)."""
    out: Set[int] = set()
    stack = [e]
    while stack:
        n = stack.pop()
        if isinstance(n, Var):
            out.add(n.index)
        elif isinstance(n, Lam):
            out.add(n.param)
            stack.append(n.body)
        elif not isinstance(n, (Const, Loc, Rid, Num)):
            stack.extend(_kids(n))
    return out


def free_vars(e: Expr) -> Set[int]:
    match e:
        case Var(i):
            return {i}
        case Lam(p, body):
            return free_vars(body) - {p}
        case Const() | Loc() | Rid() | Num():
            return set()
    out: Set[int] = set()
    for c in _kids(e):
        out |= free_vars(c)
    return out


def rename_var(e: Expr, old: int, new: int) -> Expr:
    """Rename every occurrence of variable ``old`` (free, bound, binder)."""
    match e:
        case Var(i):
            return Var(new) if i == old else e
        case Lam(p, body):
            return Lam(new if p == old else p, rename_var(body, old, new))
        case Const() | Loc() | Rid() | Num():
            return e
    return _map_kids(e, lambda c: rename_var(c, old, new))


def _map_kids(e, f):
    match e:
        case App(a, b):
            return App(f(a), f(b))
        case Ite(a, b, c):
            return Ite(f(a), f(b), f(c))
        case Ref(a):
            return Ref(f(a))
        case Deref(a):
            return Deref(f(a))
        case Assign(a, b):
            return Assign(f(a), f(b))
        case Rfork(a):
            return Rfork(f(a))
        case Rjoin(a):
            return Rjoin(f(a))
        case Add(a, b):
            return Add(f(a), f(b))
    raise TypeError(f"not a compound expression: {e!r}")


def subst(body: Expr, x: int, v: Expr) -> Expr:
    """Capture-avoiding substitution of ``v`` for free ``x`` in ``body``.

    Every binder other than ``x`` is renamed to one more than the largest
    variable of ``v``, of the binder's body and ``x`` itself.  Leaving ``x``
    out of that maximum lets the fresh name coincide with ``x`` when ``x``
    does not occur, and the renamed bound variable would then be replaced.
    """
    vs_v = variables(v) | {x}
    return _subst(body, x, v, vs_v)


def _subst(e: Expr, x: int, v: Expr, vs_v: Set[int]) -> Expr:
    match e:
        case Var(i):
            return v if i == x else e
        case Lam(y, inner):
            if y == x:
                return e
            z = max(vs_v | variables(inner)) + 1
            return Lam(z, _subst(rename_var(inner, y, z), x, v, vs_v))
        case Const() | Loc() | Rid() | Num():
            return e
    return _map_kids(e, lambda c: _subst(c, x, v, vs_v))


# ---------------------------------------------------------------------------
# Renaming


def _override(m: Optional[Mapping[int, int]]) -> FrozenMap:
    return FrozenMap((k, v) for k, v in (m or {}).items() if k != v)


@dataclass(frozen=True)
class Renaming:
    """Pair of identifier renamings, identity outside finite overrides."""

    alpha: FrozenMap  # revisions
    beta: FrozenMap  # locations

    def __init__(self, alpha=None, beta=None):
        object.__setattr__(self, "alpha", _override(alpha))
        object.__setattr__(self, "beta", _override(beta))

    @classmethod
    def identity(cls) -> "Renaming":
        return cls()

    @classmethod
    def swap_rev(cls, a: int, b: int) -> "Renaming":
        return cls(alpha={a: b, b: a})

    @classmethod
    def swap_loc(cls, a: int, b: int) -> "Renaming":
        return cls(beta={a: b, b: a})

    def rev(self, r: int) -> int:
        return self.alpha.get(r, r)

    def loc(self, l: int) -> int:
        return self.beta.get(l, l)

    def is_bijective(self) -> bool:
        return all(
            set(m.keys()) == set(m.values()) and len(set(m.values())) == len(m)
            for m in (self.alpha, self.beta)
        )

    def inverse(self) -> "Renaming":
        if not self.is_bijective():
            raise ValueError("cannot invert a non-bijective renaming")
        return Renaming(
            {v: k for k, v in self.alpha.items()},
            {v: k for k, v in self.beta.items()},
        )

    def compose(self, other: "Renaming") -> "Renaming":
        """``self after other``."""
        ra = set(self.alpha) | set(other.alpha)
        rb = set(self.beta) | set(other.beta)
        return Renaming(
            {r: self.rev(other.rev(r)) for r in ra},
            {l: self.loc(other.loc(l)) for l in rb},
        )

    def is_identity(self) -> bool:
        return not self.alpha and not self.beta


def rename(ren: Renaming, x):
    """Rename every identifier in ``x``.

    Keyed structures (stores, global states) are re-keyed through the
    renaming, which is only meaningful for bijections.
    """
    if ren.is_identity():
        return x
    if isinstance(x, (Store, GlobalState)) and not ren.is_bijective():
        raise ValueError("renaming of a keyed structure requires a bijection")
    return _rename(ren, x)


def _rename(ren: Renaming, x):
    if isinstance(x, (Expr, Context)):
        rs, ls = _ids(x)
        if rs.isdisjoint(ren.alpha._d) and ls.isdisjoint(ren.beta._d):
            return x
    match x:
        case Rid(r):
            return Rid(ren.rev(r))
        case Loc(l):
            return Loc(ren.loc(l))
        case Const() | Var() | Num() | Hole():
            return x
        case Lam(p, body):
            return Lam(p, _rename(ren, body))
        case Store():
            return Store((ren.loc(k), _rename(ren, v)) for k, v in x.items())
        case LocalState(sigma, tau, e):
            return LocalState(_rename(ren, sigma), _rename(ren, tau), _rename(ren, e))
        case GlobalState():
            return GlobalState((ren.rev(k), _rename(ren, L)) for k, L in x.items())
        case Expr():
            return _map_kids(x, lambda c: _rename(ren, c))
        case AppL(c, a):
            return AppL(_rename(ren, c), _rename(ren, a))
        case AppR(v, c):
            return AppR(_rename(ren, v), _rename(ren, c))
        case IteC(c, a, b):
            return IteC(_rename(ren, c), _rename(ren, a), _rename(ren, b))
        case RefC(c):
            return RefC(_rename(ren, c))
        case DerefC(c):
            return DerefC(_rename(ren, c))
        case AssignL(c, a):
            return AssignL(_rename(ren, c), _rename(ren, a))
        case AssignR(l, c):
            return AssignR(_rename(ren, l), _rename(ren, c))
        case RjoinC(c):
            return RjoinC(_rename(ren, c))
        case AddL(c, a):
            return AddL(_rename(ren, c), _rename(ren, a))
        case AddR(v, c):
            return AddR(_rename(ren, v), _rename(ren, c))
    raise TypeError(f"rename: unsupported {type(x).__name__}")


# ---------------------------------------------------------------------------
# Renaming equivalence


class _Bij:
    """Partial injective maps for revisions and locations, built during search."""

    __slots__ = ("a", "ai", "b", "bi")

    def __init__(self):
        self.a: Dict[int, int] = {}
        self.ai: Dict[int, int] = {}
        self.b: Dict[int, int] = {}
        self.bi: Dict[int, int] = {}

    def copy(self) -> "_Bij":
        c = _Bij()
        c.a, c.ai, c.b, c.bi = dict(self.a), dict(self.ai), dict(self.b), dict(self.bi)
        return c

    def rev(self, x: int, y: int) -> bool:
        got = self.a.get(x)
        if got is not None:
            return got == y
        if y in self.ai:
            return False
        self.a[x] = y
        self.ai[y] = x
        return True

    def loc(self, x: int, y: int) -> bool:
        got = self.b.get(x)
        if got is not None:
            return got == y
        if y in self.bi:
            return False
        self.b[x] = y
        self.bi[y] = x
        return True


def _match_expr(e1, e2, bij: _Bij) -> bool:
    stack = [(e1, e2)]
    while stack:
        a, b = stack.pop()
        if type(a) is not type(b):
            return False
        if isinstance(a, Rid):
            if not bij.rev(a.id, b.id):
                return False
        elif isinstance(a, Loc):
            if not bij.loc(a.id, b.id):
                return False
        elif isinstance(a, (Const, Num)):
            if a != b:
                return False
        elif isinstance(a, Var):
            if a.index != b.index:
                return False
        elif isinstance(a, Lam):
            if a.param != b.param:
                return False
            stack.append((a.body, b.body))
        else:
            stack.extend(zip(_kids(a), _kids(b)))
    return True


def _match_store(items, s2: Store, bij: _Bij) -> Iterator[_Bij]:
    if not items:
        yield bij
        return
    (k, v), rest = items[0], items[1:]
    if k in bij.b:
        cands: Iterable[int] = (bij.b[k],)
    else:
        cands = [k2 for k2 in s2 if k2 not in bij.bi]
    for k2 in cands:
        if k2 not in s2:
            continue
        nb = bij.copy()
        if nb.loc(k, k2) and _match_expr(v, s2[k2], nb):
            yield from _match_store(rest, s2, nb)


def _match_local(L1: LocalState, L2: LocalState, bij: _Bij) -> Iterator[_Bij]:
    if len(L1.sigma) != len(L2.sigma) or len(L1.tau) != len(L2.tau):
        return
    nb = bij.copy()
    if not _match_expr(L1.expr, L2.expr, nb):
        return
    for b1 in _match_store(list(L1.sigma.items()), L2.sigma, nb):
        yield from _match_store(list(L1.tau.items()), L2.tau, b1)


def _shape(e, owner: int, live: FrozenSet[int], doms: Tuple[Set[int], Set[int]]):
    """Expression skeleton with identifiers replaced by invariant tags."""
    match e:
        case Rid(r):
            return ("R", "self" if r == owner else ("live" if r in live else "dead"))
        case Loc(l):
            return ("L", l in doms[0], l in doms[1])
        case Const() | Num() | Var():
            return e
        case Lam(p, body):
            return ("lam", p, _shape(body, owner, live, doms))
    return (type(e).__name__,) + tuple(_shape(c, owner, live, doms) for c in _kids(e))


def _local_fingerprint(r: int, L: LocalState, live: FrozenSet[int]):
    doms = (set(L.sigma), set(L.tau))

    def store_fp(st: Store):
        return tuple(sorted(
            (repr(_shape(Loc(k), r, live, doms)), repr(_shape(v, r, live, doms)))
            for k, v in st.items()
        ))

    return (repr(_shape(L.expr, r, live, doms)), store_fp(L.sigma), store_fp(L.tau))


def fingerprint(s: GlobalState) -> int:
    """Hash of ``s`` that is invariant under bijective renaming."""
    live = frozenset(s)
    parts = sorted(repr(_local_fingerprint(r, L, live)) for r, L in s.items())
    return hash(tuple(parts))


def _complete(partial: Dict[int, int]) -> Dict[int, int]:
    """Extend a finite injection to a permutation of its support."""
    dom, ran = set(partial), set(partial.values())
    perm = dict(partial)
    for x, y in zip(sorted(ran - dom), sorted(dom - ran)):
        perm[x] = y
    return perm


def equivalent(s1: GlobalState, s2: GlobalState) -> Optional[Renaming]:
    """Return a bijective renaming taking ``s1`` to ``s2``, or ``None``."""
    if s1 == s2:
        return Renaming.identity()
    if len(s1) != len(s2):
        return None
    live1, live2 = frozenset(s1), frozenset(s2)
    fp1 = {r: _local_fingerprint(r, L, live1) for r, L in s1.items()}
    fp2 = {r: _local_fingerprint(r, L, live2) for r, L in s2.items()}
    if sorted(map(repr, fp1.values())) != sorted(map(repr, fp2.values())):
        return None

    order = sorted(s1, key=lambda r: (len(repr(fp1[r])), r))

    def search(i: int, bij: _Bij) -> Optional[_Bij]:
        if i == len(order):
            return bij
        r = order[i]
        if r in bij.a:
            cands: Iterable[int] = (bij.a[r],)
        else:
            cands = [r2 for r2 in s2 if r2 not in bij.ai and fp2[r2] == fp1[r]]
        for r2 in cands:
            if r2 not in s2 or fp2[r2] != fp1[r]:
                continue
            nb = bij.copy()
            if not nb.rev(r, r2):
                continue
            for b1 in _match_local(s1[r], s2[r2], nb):
                found = search(i + 1, b1)
                if found is not None:
                    return found
        return None

    bij = search(0, _Bij())
    if bij is None:
        return None
    ren = Renaming(_complete(bij.a), _complete(bij.b))
    assert rename(ren, s1) == s2, "equivalence witness failed to verify"
    return ren


__all__ = [
    "FrozenMap", "Store", "EMPTY_STORE", "LocalState", "GlobalState",
    "EPSILON", "rid", "lid", "variables", "free_vars", "rename_var", "subst",
    "Renaming", "rename", "equivalent", "fingerprint",
]
