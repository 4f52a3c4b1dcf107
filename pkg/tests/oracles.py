"""Independent reference implementations the library is checked against."""

from itertools import permutations

from revcalc.binding import Renaming, lid, rename, rid
from revcalc.syntax import (
    HOLE, Add, AddL, AddR, App, AppL, AppR, Assign, AssignL, AssignR, Deref,
    DerefC, Ite, IteC, Lam, Loc, Ref, RefC, Rjoin, RjoinC, Val, Var,
    children,
)


def all_splits(e):
    """Every (E, e') with E[e'] = e, read straight off the context grammar."""
    yield HOLE, e
    match e:
        case App(f, a):
            for c, r in all_splits(f):
                yield AppL(c, a), r
            if isinstance(f, Val):
                for c, r in all_splits(a):
                    yield AppR(f, c), r
        case Ite(c0, t, o):
            for c, r in all_splits(c0):
                yield IteC(c, t, o), r
        case Ref(a):
            for c, r in all_splits(a):
                yield RefC(c), r
        case Deref(a):
            for c, r in all_splits(a):
                yield DerefC(c), r
        case Assign(a, b):
            for c, r in all_splits(a):
                yield AssignL(c, b), r
            if isinstance(a, Loc):
                for c, r in all_splits(b):
                    yield AssignR(a, c), r
        case Rjoin(a):
            for c, r in all_splits(a):
                yield RjoinC(c), r
        case Add(a, b):
            for c, r in all_splits(a):
                yield AddL(c, b), r
            if isinstance(a, Val):
                for c, r in all_splits(b):
                    yield AddR(a, c), r


# ---------------------------------------------------------------------------
# De Bruijn (locally nameless) substitution


def to_db(e, env=()):
    """Bound variables become indices, free ones stay named."""
    if isinstance(e, Var):
        return ("b", env.index(e.index)) if e.index in env else ("f", e.index)
    if isinstance(e, Lam):
        return ("lam", to_db(e.body, (e.param,) + env))
    kids = children(e)
    if not kids:
        return (type(e).__name__, repr(e))
    return (type(e).__name__,) + tuple(to_db(k, env) for k in kids)


def db_subst(t, x, u):
    if t == ("f", x):
        return u
    if t[0] in ("b", "f") or isinstance(t[1], str):
        return t
    return (t[0],) + tuple(db_subst(k, x, u) for k in t[1:])


def db_free(t):
    if t[0] == "f":
        return {t[1]}
    if t[0] == "b" or isinstance(t[1], str):
        return set()
    return set().union(*(db_free(k) for k in t[1:]))


# ---------------------------------------------------------------------------
# Equivalence by enumerating every bijection


def _permutation(src, dst, f):
    """Extend the bijection ``f: src -> dst`` to a permutation of src|dst."""
    out = dict(f)
    spare_dom = sorted(set(dst) - set(src))
    spare_rng = sorted(set(src) - set(dst))
    out.update(zip(spare_dom, spare_rng))
    return out


def brute_equivalent(s1, s2):
    r1, r2 = sorted(rid(s1)), sorted(rid(s2))
    l1, l2 = sorted(lid(s1)), sorted(lid(s2))
    if len(r1) != len(r2) or len(l1) != len(l2) or len(s1) != len(s2):
        return False
    for pr in permutations(r2):
        alpha = _permutation(r1, r2, dict(zip(r1, pr)))
        for pl in permutations(l2):
            beta = _permutation(l1, l2, dict(zip(l1, pl)))
            if rename(Renaming(alpha, beta), s1) == s2:
                return True
    return False
