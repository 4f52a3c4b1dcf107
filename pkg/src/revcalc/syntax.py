"""Abstract syntax of the revision calculus.

Values are a subclass of expressions, so a value can be used wherever an
expression is expected.  Evaluation contexts have exactly one hole by
construction: every non-hole context constructor holds exactly one context.

The integer extension (``Num`` literals and ``Add``) exists only for the
cumulative merge demo and is never produced by the parser unless asked for.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from operator import attrgetter
from typing import Iterator, Optional, Tuple, Union


def _node(cls):
    """Frozen dataclass with a cached hash and tuple-based equality."""
    cls = dataclass(frozen=True)(cls)
    names = tuple(f.name for f in fields(cls))
    tag = cls.__name__
    key = attrgetter(*names) if names else (lambda _: ())

    def __hash__(self):
        try:
            return self.__dict__["_hash"]
        except KeyError:
            h = hash((tag, key(self)))
            object.__setattr__(self, "_hash", h)
            return h

    def __eq__(self, other):
        if self is other:
            return True
        if type(other) is not type(self):
            return NotImplemented
        return key(self) == key(other)

    cls.__hash__ = __hash__
    cls.__eq__ = __eq__
    return cls


class Expr:
    __slots__ = ()


class Val(Expr):
    __slots__ = ()


@_node
class Const(Val):
    name: str

    def __post_init__(self):
        if self.name not in ("unit", "true", "false"):
            raise ValueError(f"unknown constant {self.name!r}")


UNIT = Const("unit")
TRUE = Const("true")
FALSE = Const("false")


@_node
class Var(Val):
    index: int


@_node
class Loc(Val):
    id: int


@_node
class Rid(Val):
    id: int


@_node
class Lam(Val):
    param: int
    body: Expr


@_node
class Num(Val):
    """Integer literal (extension, cumulative demo only)."""

    value: int


@_node
class App(Expr):
    fn: Expr
    arg: Expr


@_node
class Ite(Expr):
    cond: Expr
    then: Expr
    orelse: Expr


@_node
class Ref(Expr):
    init: Expr


@_node
class Deref(Expr):
    loc: Expr


@_node
class Assign(Expr):
    lhs: Expr
    rhs: Expr


@_node
class Rfork(Expr):
    body: Expr


@_node
class Rjoin(Expr):
    rev: Expr


@_node
class Add(Expr):
    """Integer addition (extension, cumulative demo only)."""

    lhs: Expr
    rhs: Expr


# ---------------------------------------------------------------------------
# Evaluation contexts


class Context:
    __slots__ = ()


@_node
class Hole(Context):
    pass


HOLE = Hole()


@_node
class AppL(Context):
    ctx: Context
    arg: Expr


@_node
class AppR(Context):
    fn: Val
    ctx: Context


@_node
class IteC(Context):
    ctx: Context
    then: Expr
    orelse: Expr


@_node
class RefC(Context):
    ctx: Context


@_node
class DerefC(Context):
    ctx: Context


@_node
class AssignL(Context):
    ctx: Context
    rhs: Expr


@_node
class AssignR(Context):
    loc: Loc
    ctx: Context


@_node
class RjoinC(Context):
    ctx: Context


@_node
class AddL(Context):
    ctx: Context
    rhs: Expr


@_node
class AddR(Context):
    lhs: Val
    ctx: Context


Node = Union[Expr, Context]


def plug(ctx: Context, e: Expr) -> Expr:
    """Replace the hole of ``ctx`` by ``e``."""
    # Unwind the context spine first so deep contexts do not recurse.
    spine = []
    while not isinstance(ctx, Hole):
        spine.append(ctx)
        ctx = ctx.ctx
    for c in reversed(spine):
        match c:
            case AppL(_, arg):
                e = App(e, arg)
            case AppR(fn, _):
                e = App(fn, e)
            case IteC(_, then, orelse):
                e = Ite(e, then, orelse)
            case RefC():
                e = Ref(e)
            case DerefC():
                e = Deref(e)
            case AssignL(_, rhs):
                e = Assign(e, rhs)
            case AssignR(loc, _):
                e = Assign(loc, e)
            case RjoinC():
                e = Rjoin(e)
            case AddL(_, rhs):
                e = Add(e, rhs)
            case AddR(lhs, _):
                e = Add(lhs, e)
            case _:
                raise TypeError(f"not a context: {c!r}")
    return e


def is_redex(e: Expr) -> bool:
    match e:
        case App(Lam(), arg):
            return isinstance(arg, Val)
        case Ite(Const("true" | "false"), _, _):
            return True
        case Ref(init):
            return isinstance(init, Val)
        case Deref(Loc()):
            return True
        case Assign(Loc(), rhs):
            return isinstance(rhs, Val)
        case Rfork():
            return True
        case Rjoin(Rid()):
            return True
        case Add(Num(), Num()):
            return True
    return False


def decompose(e: Expr) -> Optional[Tuple[Context, Expr]]:
    """Split ``e`` into its unique evaluation context and redex.

    Returns ``None`` for values and for stuck expressions that have no
    redex in evaluation position.
    """
    spine = []
    while True:
        if is_redex(e):
            break
        match e:
            case App(fn, arg):
                if not isinstance(fn, Val):
                    spine.append(("AppL", arg))
                    e = fn
                else:
                    spine.append(("AppR", fn))
                    e = arg
            case Ite(cond, then, orelse):
                spine.append(("IteC", (then, orelse)))
                e = cond
            case Ref(init):
                spine.append(("RefC", None))
                e = init
            case Deref(loc):
                spine.append(("DerefC", None))
                e = loc
            case Assign(lhs, rhs):
                if not isinstance(lhs, Val):
                    spine.append(("AssignL", rhs))
                    e = lhs
                elif isinstance(lhs, Loc):
                    spine.append(("AssignR", lhs))
                    e = rhs
                else:
                    return None
            case Rjoin(rev):
                spine.append(("RjoinC", None))
                e = rev
            case Add(lhs, rhs):
                if not isinstance(lhs, Val):
                    spine.append(("AddL", rhs))
                    e = lhs
                else:
                    spine.append(("AddR", lhs))
                    e = rhs
            case _:
                return None
    ctx: Context = HOLE
    for kind, payload in reversed(spine):
        if kind == "AppL":
            ctx = AppL(ctx, payload)
        elif kind == "AppR":
            ctx = AppR(payload, ctx)
        elif kind == "IteC":
            ctx = IteC(ctx, *payload)
        elif kind == "RefC":
            ctx = RefC(ctx)
        elif kind == "DerefC":
            ctx = DerefC(ctx)
        elif kind == "AssignL":
            ctx = AssignL(ctx, payload)
        elif kind == "AssignR":
            ctx = AssignR(payload, ctx)
        elif kind == "RjoinC":
            ctx = RjoinC(ctx)
        elif kind == "AddL":
            ctx = AddL(ctx, payload)
        else:
            ctx = AddR(payload, ctx)
    return ctx, e


def children(n: Node) -> Tuple[Node, ...]:
    """Immediate sub-expressions and sub-contexts, in field order."""
    vals = (getattr(n, f.name) for f in fields(n))
    return tuple(c for c in vals if isinstance(c, (Expr, Context)))


def subterms(n: Node) -> Iterator[Node]:
    """Pre-order traversal of ``n`` (including ``n``)."""
    stack = [n]
    while stack:
        cur = stack.pop()
        yield cur
        stack.extend(reversed(children(cur)))


def size(n: Node) -> int:
    return sum(1 for _ in subterms(n))


__all__ = [
    "Expr", "Val", "Const", "UNIT", "TRUE", "FALSE", "Var", "Loc", "Rid",
    "Lam", "Num", "App", "Ite", "Ref", "Deref", "Assign", "Rfork", "Rjoin",
    "Add", "Context", "Hole", "HOLE", "AppL", "AppR", "IteC", "RefC",
    "DerefC", "AssignL", "AssignR", "RjoinC", "AddL", "AddR", "plug",
    "is_redex", "decompose", "children", "subterms", "size",
]
