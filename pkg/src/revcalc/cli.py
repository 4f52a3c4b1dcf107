"""``revcalc`` command line.

Exit codes:

    0  success (terminal state, determinate, audit clean)
    1  parse or validation error, unreadable file
    2  run ended in a deadlock
    3  run collapsed to epsilon
    4  bound exceeded / verdict unknown
    5  indeterminate
    6  audit violation
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

from . import analysis as an
from .frontend import ParseError, parse_with_symbols, pretty
from .semantics import (
    CANONICAL, CUMULATIVE, ID_SENSITIVE, VERSIONED, AllocPolicy, Arbitrary,
    MergePolicy, Mode, NotAProgramExpression,
)

EXIT_OK, EXIT_PARSE, EXIT_DEADLOCK, EXIT_EPSILON, EXIT_BOUND = 0, 1, 2, 3, 4
EXIT_INDETERMINATE, EXIT_VIOLATION = 5, 6

RUN_EXIT = {"terminal": EXIT_OK, "deadlock": EXIT_DEADLOCK,
            "epsilon": EXIT_EPSILON, "bound": EXIT_BOUND}

MERGES = {"versioned": VERSIONED, "cumulative": CUMULATIVE, "id-sensitive": ID_SENSITIVE}


@dataclass(frozen=True)
class RunConfig:
    mode: Mode = Mode.CONSERVATIVE
    alloc: AllocPolicy = CANONICAL
    merge: str = "versioned"
    depth_bound: int = an.DEPTH_BOUND
    state_bound: int = an.STATE_BOUND
    format: str = "text"
    jobs: int = 1

    @property
    def merge_policy(self) -> MergePolicy:
        return MERGES[self.merge]


def _alloc(text: str) -> AllocPolicy:
    if text == "canonical":
        return CANONICAL
    kind, _, seed = text.partition(":")
    if kind == "arbitrary" and seed.lstrip("-").isdigit():
        return Arbitrary(int(seed))
    raise argparse.ArgumentTypeError("expected 'canonical' or 'arbitrary:SEED'")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="revcalc", description=__doc__.split("\n")[0],
                                epilog=__doc__.split("\n", 1)[1],
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, multi=False):
        if multi:
            sp.add_argument("files", nargs="+", type=Path)
        else:
            sp.add_argument("file", type=Path)
        sp.add_argument("--mode", choices=[m.value for m in Mode], default="conservative")
        sp.add_argument("--alloc", type=_alloc, default=CANONICAL,
                        help="canonical or arbitrary:SEED")
        sp.add_argument("--merge", choices=sorted(MERGES), default="versioned")
        sp.add_argument("--depth", type=int, default=an.DEPTH_BOUND)
        sp.add_argument("--states", type=int, default=an.STATE_BOUND)
        sp.add_argument("--format", choices=["text", "json", "dot"], default="text")
        sp.add_argument("--jobs", type=int, default=1)
        sp.add_argument("--out", type=Path, help="write output here instead of stdout")

    common(sub.add_parser("parse", help="parse and pretty-print a program"))
    common(sub.add_parser("run", help="execute one maximal trace"))
    common(sub.add_parser("explore", help="enumerate the reachable state space"))
    common(sub.add_parser("check", help="decide determinacy by exhaustive exploration"))
    common(sub.add_parser("audit", help="run the invariant checkers"), multi=True)
    common(sub.add_parser("diagram", help="emit a revision diagram for one run"))
    return p


def _config(args) -> RunConfig:
    return RunConfig(Mode(args.mode), args.alloc, args.merge, args.depth,
                     args.states, args.format, args.jobs)


def _load(path: Path):
    src = path.read_text(encoding="utf-8")
    return parse_with_symbols(src, extended=True)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False, sort_keys=True) + "\n"


def _trace_text(t: an.Trace) -> List[str]:
    lines = [f"  0. {an.format_state(t.initial)}"]
    for i, (label, s) in enumerate(t.steps, 1):
        lines.append(f"  {i}. {label}  {an.format_state(s)}")
    return lines


def cmd_parse(e, names, cfg: RunConfig):
    if cfg.format == "json":
        return EXIT_OK, _dump({"expr": pretty(e), "named": pretty(e, names)})
    return EXIT_OK, pretty(e, names) + "\n"


def cmd_run(e, names, cfg: RunConfig):
    trace, outcome = an.run(e, cfg.mode, cfg.alloc, cfg.merge_policy, cfg.depth_bound)
    code = RUN_EXIT[outcome]
    if cfg.format == "json":
        return code, _dump({"outcome": outcome, "trace": an.trace_to_json(trace)})
    if cfg.format == "dot":
        return code, an.emit_revision_diagram(trace)
    text = [f"outcome: {outcome}", f"steps: {len(trace)}",
            f"final: {an.format_state(trace.final)}"]
    return code, "\n".join(text) + "\n"


def _explore(e, cfg: RunConfig) -> an.ExplorationResult:
    return an.explore(e, cfg.mode, cfg.alloc, cfg.merge_policy, cfg.depth_bound,
                      cfg.state_bound, collapse=True, jobs=cfg.jobs)


def cmd_explore(e, names, cfg: RunConfig):
    res = _explore(e, cfg)
    code = EXIT_BOUND if res.bound_exceeded else EXIT_OK
    classes = an.equivalence_classes(res.maximal_states)
    if cfg.format == "json":
        return code, _dump({
            "states": res.state_count,
            "bound_exceeded": res.bound_exceeded,
            "maximal": [{"kind": an.classify(c[0]), "count": len(c),
                         "state": an.state_to_json(c[0])} for c in classes],
        })
    lines = [f"states: {res.state_count}", f"bound exceeded: {res.bound_exceeded}",
             f"maximal states: {len(res.maximal_states)} in {len(classes)} class(es)"]
    for c in classes:
        lines.append(f"  [{an.classify(c[0])} x{len(c)}] {an.format_state(c[0])}")
    return code, "\n".join(lines) + "\n"


def cmd_check(e, names, cfg: RunConfig):
    v = an.verdict_of(_explore(e, cfg))
    if isinstance(v, an.Determinate):
        code = EXIT_OK
        if cfg.format == "json":
            out = {"verdict": "determinate", "states": v.state_count,
                   "outcome": None if v.outcome is None else an.state_to_json(v.outcome)}
            return code, _dump(out)
        shown = "none" if v.outcome is None else an.format_state(v.outcome)
        return code, f"determinate ({v.state_count} states)\noutcome: {shown}\n"
    if isinstance(v, an.Unknown):
        if cfg.format == "json":
            return EXIT_BOUND, _dump({"verdict": "unknown", "states": v.state_count})
        return EXIT_BOUND, f"unknown: bound exceeded after {v.state_count} states\n"
    if cfg.format == "json":
        return EXIT_INDETERMINATE, _dump({
            "verdict": "indeterminate", "states": v.state_count,
            "classes": v.class_count,
            "witnesses": [an.trace_to_json(v.first_trace), an.trace_to_json(v.second_trace)],
        })
    lines = [f"indeterminate ({v.state_count} states, {v.class_count} classes)",
             f"witness 1: {an.format_state(v.first)}"]
    lines += _trace_text(v.first_trace)
    lines.append(f"witness 2: {an.format_state(v.second)}")
    lines += _trace_text(v.second_trace)
    lines.append("the two witnesses are not equivalent under any renaming")
    return EXIT_INDETERMINATE, "\n".join(lines) + "\n"


def audit_reports(e, cfg: RunConfig) -> List[an.CheckReport]:
    merge = cfg.merge_policy
    res = an.explore(e, cfg.mode, CANONICAL, merge, cfg.depth_bound, cfg.state_bound,
                     collapse=False, jobs=cfg.jobs)
    reports = [an.check_inductive_invariant(res)]
    if cfg.mode is Mode.CONSERVATIVE:
        reports.append(an.check_mode_equivalence(res, merge=merge))
    reports.append(an.check_strong_local_confluence(res, mode=cfg.mode, merge=merge))
    reports.append(an.check_mimicking(res, mode=cfg.mode, merge=merge, max_states=400))
    reports.append(an.check_confluence(res))
    return reports


def cmd_audit(files, cfg: RunConfig):
    code = EXIT_OK
    out = []
    dumps = []
    for path, e in files:
        reports = audit_reports(e, cfg)
        for r in reports:
            out.append(f"{path}: {r}")
            if not r.holds:
                code = EXIT_VIOLATION
                out.append(f"  {r.failures[0]}")
                dumps.append({"file": str(path), "check": r.name, "failure": r.failures[0],
                              "trace": None if r.counterexample is None else
                              an.trace_to_json(r.counterexample)})
        if code == EXIT_OK and any(r.bound_exceeded for r in reports):
            code = EXIT_BOUND
    if cfg.format == "json":
        return code, _dump({"lines": out, "violations": dumps})
    text = "\n".join(out) + "\n"
    if dumps:
        text += _dump(dumps)
    return code, text


def cmd_diagram(e, names, cfg: RunConfig):
    trace, outcome = an.run(e, cfg.mode, cfg.alloc, cfg.merge_policy, cfg.depth_bound)
    return EXIT_OK, an.emit_revision_diagram(trace)


COMMANDS = {"parse": cmd_parse, "run": cmd_run, "explore": cmd_explore,
            "check": cmd_check, "diagram": cmd_diagram}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = _config(args)
    paths = args.files if args.command == "audit" else [args.file]
    loaded = []
    for path in paths:
        try:
            e, names = _load(path)
            if args.command != "parse":
                an.initial_state(e)
        except (OSError, ParseError, NotAProgramExpression) as exc:
            print(f"revcalc: {path}: {exc}", file=sys.stderr)
            return EXIT_PARSE
        loaded.append((path, e, names))
    if args.command == "audit":
        code, text = cmd_audit([(p, e) for p, e, _ in loaded], cfg)
    else:
        _, e, names = loaded[0]
        code, text = COMMANDS[args.command](e, names, cfg)
    if args.out is not None:
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
