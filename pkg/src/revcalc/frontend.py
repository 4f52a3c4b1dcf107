"""Concrete syntax for ``.rev`` programs.

Grammar, loosest binding first::

    expr   ::= 'fun' NAME '->' expr | 'let' NAME '=' expr 'in' expr | seq
    seq    ::= cond [';' expr]                   e1; e2  =  (fun _ -> e2) e1
    cond   ::= assign ['?' cond ':' cond]
    assign ::= sum [':=' assign]
    sum    ::= app {'+' app}                     integer extension only
    app    ::= prefix {prefix}
    prefix ::= ('ref' | '!' | 'rfork' | 'rjoin') prefix | atom
    atom   ::= 'unit' | 'true' | 'false' | NAME | '(' expr ')'
             | 'fun' ... | 'let' ...
             | _N | #rN | #lN | N                 dump mode / extension

Surface names are interned to naturals in first-occurrence order.  ``_N``
denotes variable N verbatim and is what :func:`pretty` prints by default,
so ``parse(pretty(e)) == e`` for every identifier-free expression.
``#rN``/``#lN`` literals are rejected in program sources and accepted when
parsing trace dumps.  ``--`` starts a line comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .syntax import (
    Add, App, Assign, Const, Deref, Expr, Ite, Lam, Loc,
    Num, Ref, Rfork, Rid, Rjoin, Var,
)

KEYWORDS = {"fun", "let", "in", "ref", "rfork", "rjoin", "unit", "true", "false"}

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+|--[^\n]*)
  | (?P<nl>\n)
  | (?P<ident>\#[rl]\d+)
  | (?P<raw>_\d+)
  | (?P<num>-?\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<op>->|:=|[()?:;=!+])
""", re.VERBOSE)


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


class ValidationError(ParseError):
    """Well-formed source that is not a valid program expression."""


@dataclass
class SymbolTable:
    """Surface name to natural, assigned in first-occurrence order."""

    names: Dict[str, int] = field(default_factory=dict)
    reserved: frozenset = frozenset()

    def intern(self, name: str) -> int:
        if name not in self.names:
            n = 0
            taken = set(self.names.values()) | self.reserved
            while n in taken:
                n += 1
            self.names[name] = n
        return self.names[name]

    def name_of(self, n: int) -> Optional[str]:
        for k, v in self.names.items():
            if v == n and not k.startswith(";"):
                return k
        return None


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _lex(src: str) -> List[_Tok]:
    toks = []
    line, start, pos = 1, 0, 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", line, pos - start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            start = m.end()
        elif kind != "ws":
            text = m.group()
            if kind == "name" and text in KEYWORDS:
                kind = "kw"
            toks.append(_Tok(kind, text, line, m.start() - start + 1))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - start + 1))
    return toks


class _Parser:
    def __init__(self, src: str, allow_ids: bool, extended: bool):
        self.toks = _lex(src)
        self.i = 0
        self.allow_ids = allow_ids
        self.extended = extended
        raw = {int(t.text[1:]) for t in self.toks if t.kind == "raw"}
        self.table = SymbolTable(reserved=frozenset(raw))
        self.scopes: List[str] = []
        self.fresh = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def fail(self, msg: str, tok: Optional[_Tok] = None):
        t = tok or self.tok
        raise ParseError(msg, t.line, t.col)

    def eat(self, text: str) -> _Tok:
        t = self.tok
        if t.text != text or t.kind not in ("op", "kw"):
            self.fail(f"expected {text!r}, found {t.text or 'end of input'!r}")
        self.i += 1
        return t

    def at(self, *texts: str) -> bool:
        return self.tok.kind in ("op", "kw") and self.tok.text in texts

    def binder(self) -> Tuple[str, int]:
        t = self.tok
        if t.kind == "raw":
            self.i += 1
            return t.text, int(t.text[1:])
        if t.kind != "name":
            self.fail(f"expected a variable name, found {t.text or 'end of input'!r}")
        self.i += 1
        name = t.text
        if name == "_":
            name = self.hidden()
        return name, self.table.intern(name)

    def hidden(self) -> str:
        self.fresh += 1
        return f";{self.fresh}"

    def scoped(self, name: str, parse):
        self.scopes.append(name)
        try:
            return parse()
        finally:
            self.scopes.pop()

    # -- grammar ------------------------------------------------------------

    def expr(self) -> Expr:
        if self.at("fun"):
            self.eat("fun")
            name, n = self.binder()
            self.eat("->")
            return Lam(n, self.scoped(name, self.expr))
        if self.at("let"):
            self.eat("let")
            name, n = self.binder()
            self.eat("=")
            bound = self.expr()
            self.eat("in")
            return App(Lam(n, self.scoped(name, self.expr)), bound)
        return self.seq()

    def seq(self) -> Expr:
        first = self.cond()
        if self.at(";"):
            self.eat(";")
            name = self.hidden()
            n = self.table.intern(name)
            return App(Lam(n, self.scoped(name, self.expr)), first)
        return first

    def cond(self) -> Expr:
        c = self.assign()
        if self.at("?"):
            self.eat("?")
            then = self.cond()
            self.eat(":")
            return Ite(c, then, self.cond())
        return c

    def assign(self) -> Expr:
        lhs = self.sum()
        if self.at(":="):
            self.eat(":=")
            return Assign(lhs, self.assign())
        return lhs

    def sum(self) -> Expr:
        e = self.app()
        while self.at("+"):
            if not self.extended:
                self.fail("'+' requires the integer extension")
            self.eat("+")
            e = Add(e, self.app())
        return e

    def starts_atom(self) -> bool:
        t = self.tok
        if t.kind in ("name", "raw", "ident", "num"):
            return True
        return t.kind in ("op", "kw") and t.text in (
            "(", "!", "ref", "rfork", "rjoin", "unit", "true", "false", "fun", "let")

    def app(self) -> Expr:
        e = self.prefix()
        while self.starts_atom():
            e = App(e, self.prefix())
        return e

    def prefix(self) -> Expr:
        for word, ctor in (("ref", Ref), ("!", Deref), ("rfork", Rfork), ("rjoin", Rjoin)):
            if self.at(word):
                self.eat(word)
                return ctor(self.prefix())
        return self.atom()

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "kw" and t.text in ("unit", "true", "false"):
            self.i += 1
            return Const(t.text)
        if self.at("fun", "let"):
            return self.expr()
        if self.at("("):
            self.eat("(")
            e = self.expr()
            self.eat(")")
            return e
        if t.kind == "name":
            self.i += 1
            if t.text not in self.scopes:
                self.fail(f"unbound name {t.text!r}", t)
            return Var(self.table.intern(t.text))
        if t.kind == "raw":
            self.i += 1
            return Var(int(t.text[1:]))
        if t.kind == "ident":
            if not self.allow_ids:
                raise ValidationError(
                    f"identifier literal {t.text} is not allowed in a program", t.line, t.col)
            self.i += 1
            n = int(t.text[2:])
            return Rid(n) if t.text[1] == "r" else Loc(n)
        if t.kind == "num":
            if not self.extended:
                self.fail("integer literals require the integer extension")
            self.i += 1
            return Num(int(t.text))
        self.fail(f"unexpected {t.text or 'end of input'!r}")

    def program(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "eof":
            self.fail(f"unexpected {self.tok.text!r} after expression")
        return e


def parse_with_symbols(src: str, *, allow_ids: bool = False,
                       extended: bool = False) -> Tuple[Expr, SymbolTable]:
    p = _Parser(src, allow_ids, extended)
    return p.program(), p.table


def parse(src: str, *, allow_ids: bool = False, extended: bool = False) -> Expr:
    """Parse a program.  ``allow_ids`` enables trace-dump mode."""
    return parse_with_symbols(src, allow_ids=allow_ids, extended=extended)[0]


# ---------------------------------------------------------------------------
# Printing

# precedence levels: 0 fun/let, 1 ?:, 2 :=, 3 +, 4 application, 5 prefix, 6 atom


def pretty(e: Expr, names: Optional[SymbolTable] = None) -> str:
    """Render ``e`` in concrete syntax.

    Without ``names`` variables print as ``_N``; with a table, interned
    names are used where available.
    """

    def var(n: int) -> str:
        if names is not None:
            nm = names.name_of(n)
            if nm is not None:
                return nm
        return f"_{n}"

    def go(e: Expr, level: int) -> str:
        text, own = render(e)
        return f"({text})" if own < level else text

    def render(e: Expr) -> Tuple[str, int]:
        match e:
            case Const(name):
                return name, 6
            case Var(n):
                return var(n), 6
            case Loc(n):
                return f"#l{n}", 6
            case Rid(n):
                return f"#r{n}", 6
            case Num(v):
                return str(v), 6
            case Lam(p, body):
                return f"fun {var(p)} -> {go(body, 0)}", 0
            case Ite(c, t, f):
                return f"{go(c, 2)} ? {go(t, 1)} : {go(f, 1)}", 1
            case Assign(a, b):
                return f"{go(a, 3)} := {go(b, 2)}", 2
            case Add(a, b):
                return f"{go(a, 3)} + {go(b, 4)}", 3
            case App(f, a):
                return f"{go(f, 4)} {go(a, 5)}", 4
            case Ref(a):
                return f"ref {go(a, 5)}", 5
            case Deref(a):
                return f"!{go(a, 5)}", 5
            case Rfork(a):
                return f"rfork {go(a, 5)}", 5
            case Rjoin(a):
                return f"rjoin {go(a, 5)}", 5
        raise TypeError(f"cannot print {e!r}")

    return go(e, 0)


__all__ = [
    "ParseError", "ValidationError", "SymbolTable", "parse",
    "parse_with_symbols", "pretty", "KEYWORDS",
]
