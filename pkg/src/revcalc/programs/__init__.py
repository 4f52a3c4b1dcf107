"""Bundled example programs (``*.rev``)."""

from importlib import resources
from typing import Dict, List

from ..frontend import ParseError, parse
from ..syntax import Expr

def names() -> List[str]:
    files = resources.files(__name__).iterdir()
    return sorted(f.name[:-4] for f in files if f.name.endswith(".rev"))


def path(name: str):
    return resources.files(__name__).joinpath(f"{name}.rev")


def source(name: str) -> str:
    return path(name).read_text(encoding="utf-8")


def load(name: str) -> Expr:
    return parse(source(name), extended=True)


def corpus() -> Dict[str, Expr]:
    return {n: load(n) for n in names()}


def core() -> Dict[str, Expr]:
    """Programs written in the base calculus (no integer extension)."""
    out = {}
    for n in names():
        try:
            out[n] = parse(source(n))
        except ParseError:
            continue
    return out
