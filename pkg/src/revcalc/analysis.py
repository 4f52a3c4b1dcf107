"""Executions, exhaustive exploration and brute-force property checks.

Exploration is breadth-first from the initial state of a program.  Under the
weak-fork reading every fork additionally branches on each identifier that
rule would allow but a conservative fork would not, so the exploration sees
identifier reuse.
"""

from __future__ import annotations

import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .binding import (
    GlobalState, LocalState, Renaming, Store,
    equivalent, fingerprint, lid, rename, rid,
)
from .frontend import parse, pretty
from .semantics import (
    CANONICAL, VERSIONED, AllocPolicy, Arbitrary, MergePolicy, Mode,
    NotEnabled, StepLabel, UndefinedRead, enabled_steps, initial_state,
    is_terminal, step, weak_fork_variants,
)
from .syntax import Expr, decompose

DEPTH_BOUND = 10_000
STATE_BOUND = 1_000_000

Step = Tuple[StepLabel, GlobalState]


@dataclass(frozen=True)
class Trace:
    initial: GlobalState
    steps: Tuple[Step, ...] = ()

    @property
    def final(self) -> GlobalState:
        return self.steps[-1][1] if self.steps else self.initial

    def __len__(self):
        return len(self.steps)

    def replay(self, mode: Mode = Mode.CONSERVATIVE,
               merge: MergePolicy = VERSIONED) -> bool:
        """True iff every recorded successor is reproduced by :func:`step`."""
        s = self.initial
        for label, recorded in self.steps:
            try:
                s = step(s, label, mode, merge=merge)
            except NotEnabled:
                return False
            if s != recorded:
                return False
        return True


def successors(s: GlobalState, mode: Mode = Mode.CONSERVATIVE,
               alloc: AllocPolicy = CANONICAL,
               merge: MergePolicy = VERSIONED) -> List[Step]:
    """Labelled successors used by exploration (weak-fork branching included)."""
    out = enabled_steps(s, mode, alloc, merge)
    if mode is Mode.WEAK_FORK:
        extra = []
        for label, _ in out:
            for alt in weak_fork_variants(s, label):
                extra.append((alt, step(s, alt, mode, alloc, merge)))
        out = sorted(out + extra, key=lambda p: p[0])
    return out


def classify(s: GlobalState) -> str:
    if not s:
        return "epsilon"
    return "terminal" if is_terminal(s) else "deadlock"


@dataclass
class ExplorationResult:
    initial: GlobalState
    maximal_states: List[GlobalState]
    terminal_values: List[GlobalState]
    deadlocks: List[GlobalState]
    bound_exceeded: bool
    state_count: int
    witness_traces: Dict[GlobalState, Trace]
    graph: Dict[GlobalState, List[Step]] = field(repr=False)
    parents: Dict[GlobalState, Optional[Tuple[GlobalState, StepLabel, GlobalState]]] = field(repr=False)
    mode: Mode = Mode.CONSERVATIVE
    merge: MergePolicy = VERSIONED

    @property
    def states(self) -> List[GlobalState]:
        return list(self.parents)

    def trace_to(self, s: GlobalState) -> Trace:
        """Witness execution from the initial state to explored state ``s``."""
        steps = []
        cur = s
        while self.parents[cur] is not None:
            prev, label, reached = self.parents[cur]
            steps.append((label, reached))
            cur = prev
        steps.reverse()
        return Trace(self.initial, tuple(steps))


def _expand(args):
    s, mode, alloc, merge = args
    return successors(s, mode, alloc, merge)


class _Quotient:
    """Representatives of explored states up to renaming equivalence."""

    def __init__(self):
        self.buckets: Dict[int, List[GlobalState]] = {}

    def find(self, s: GlobalState) -> Optional[GlobalState]:
        for rep in self.buckets.get(fingerprint(s), ()):
            if equivalent(rep, s) is not None:
                return rep
        return None

    def add(self, s: GlobalState):
        self.buckets.setdefault(fingerprint(s), []).append(s)


def explore_state(s0: GlobalState, mode: Mode = Mode.CONSERVATIVE,
                  alloc: AllocPolicy = CANONICAL, merge: MergePolicy = VERSIONED,
                  depth_bound: int = DEPTH_BOUND, state_bound: int = STATE_BOUND,
                  collapse: bool = True, jobs: int = 1) -> ExplorationResult:
    """Breadth-first closure of the step relation from ``s0``.

    With ``collapse`` a successor that is renaming-equivalent to an already
    explored state is redirected to that state instead of being explored
    again.  Results do not depend on ``jobs``: successors are computed in
    parallel but merged in frontier order.
    """
    parents: Dict[GlobalState, Optional[tuple]] = {s0: None}
    depth = {s0: 0}
    graph: Dict[GlobalState, List[Step]] = {}
    quotient = _Quotient()
    if collapse:
        quotient.add(s0)
    exceeded = False
    maximal: List[GlobalState] = []
    frontier = [s0]
    pool = ProcessPoolExecutor(jobs) if jobs > 1 else None
    try:
        while frontier:
            work = [(s, mode, alloc, merge) for s in frontier]
            if pool is not None:
                chunk = max(1, len(work) // (4 * jobs))
                results = list(pool.map(_expand, work, chunksize=chunk))
            else:
                results = [_expand(w) for w in work]
            nxt = []
            for s, succ in zip(frontier, results):
                if not succ:
                    maximal.append(s)
                elif depth[s] >= depth_bound:
                    exceeded = True
                    continue
                edges = []
                for label, t in succ:
                    target = t
                    if t not in parents:
                        rep = quotient.find(t) if collapse else None
                        if rep is not None:
                            target = rep
                        elif len(parents) >= state_bound:
                            exceeded = True
                            continue
                        else:
                            parents[t] = (s, label, t)
                            depth[t] = depth[s] + 1
                            if collapse:
                                quotient.add(t)
                            nxt.append(t)
                    edges.append((label, target))
                graph[s] = edges
            frontier = nxt
    finally:
        if pool is not None:
            pool.shutdown()

    result = ExplorationResult(
        initial=s0,
        maximal_states=maximal,
        terminal_values=[s for s in maximal if classify(s) == "terminal"],
        deadlocks=[s for s in maximal if classify(s) == "deadlock"],
        bound_exceeded=exceeded,
        state_count=len(parents),
        witness_traces={},
        graph=graph,
        parents=parents,
        mode=mode,
        merge=merge,
    )
    result.witness_traces = {s: result.trace_to(s) for s in maximal}
    return result


def explore(e: Expr, mode: Mode = Mode.CONSERVATIVE, alloc: AllocPolicy = CANONICAL,
            merge: MergePolicy = VERSIONED, depth_bound: int = DEPTH_BOUND,
            state_bound: int = STATE_BOUND, collapse: bool = True,
            jobs: int = 1) -> ExplorationResult:
    return explore_state(initial_state(e), mode, alloc, merge, depth_bound,
                         state_bound, collapse, jobs)


def equivalence_classes(states: Iterable[GlobalState]) -> List[List[GlobalState]]:
    classes: List[List[GlobalState]] = []
    index: Dict[int, List[int]] = {}
    for s in states:
        fp = fingerprint(s)
        for i in index.get(fp, ()):
            if equivalent(classes[i][0], s) is not None:
                classes[i].append(s)
                break
        else:
            index.setdefault(fp, []).append(len(classes))
            classes.append([s])
    return classes


# ---------------------------------------------------------------------------
# Determinacy


@dataclass(frozen=True)
class Determinate:
    outcome: Optional[GlobalState]
    maximal_count: int
    state_count: int


@dataclass(frozen=True)
class Indeterminate:
    first: GlobalState
    second: GlobalState
    first_trace: Trace
    second_trace: Trace
    class_count: int
    state_count: int


@dataclass(frozen=True)
class Unknown:
    bound_exceeded: bool
    state_count: int


DeterminacyVerdict = Union[Determinate, Indeterminate, Unknown]


def verdict_of(result: ExplorationResult) -> DeterminacyVerdict:
    classes = equivalence_classes(result.maximal_states)
    if len(classes) > 1:
        a, b = classes[0][0], classes[1][0]
        return Indeterminate(a, b, result.witness_traces[a], result.witness_traces[b],
                             len(classes), result.state_count)
    if result.bound_exceeded:
        return Unknown(True, result.state_count)
    outcome = classes[0][0] if classes else None
    return Determinate(outcome, len(result.maximal_states), result.state_count)


def check_determinacy(e: Expr, mode: Mode = Mode.CONSERVATIVE,
                      merge: MergePolicy = VERSIONED, depth_bound: int = DEPTH_BOUND,
                      alloc: AllocPolicy = CANONICAL, state_bound: int = STATE_BOUND,
                      jobs: int = 1) -> DeterminacyVerdict:
    """Compare all maximal states of ``e`` up to renaming.

    Two non-equivalent maximal states settle the question even when the
    exploration hit a bound.
    """
    return verdict_of(explore(e, mode, alloc, merge, depth_bound, state_bound,
                              collapse=True, jobs=jobs))


# ---------------------------------------------------------------------------
# Invariants


def check_S(L: LocalState) -> bool:
    return lid(L) <= L.doms()


def check_S_G(s: GlobalState) -> bool:
    return all(check_S(L) for L in s.values())


class OutOfDomain(KeyError):
    pass


def check_A(r: int, r2: int, s: GlobalState) -> bool:
    if r not in s or r2 not in s:
        raise OutOfDomain(f"revisions {r}, {r2} must both be in the domain")
    if r2 not in rid(s[r]):
        return True
    return lid(s[r2].sigma) <= s[r].doms()


def check_A_G(s: GlobalState) -> bool:
    return all(check_A(r, r2, s) for r in s for r2 in s)


@dataclass
class CheckReport:
    name: str
    checked: int = 0
    failures: List[str] = field(default_factory=list)
    counterexample: Optional[Trace] = None
    bound_exceeded: bool = False

    @property
    def holds(self) -> bool:
        return not self.failures

    def __bool__(self):
        return self.holds

    def fail(self, message: str, trace: Optional[Trace] = None):
        self.failures.append(message)
        if self.counterexample is None and trace is not None:
            self.counterexample = trace

    def __str__(self):
        status = "ok" if self.holds else f"FAILED ({len(self.failures)})"
        return f"{self.name}: {status}, {self.checked} checked"


def _explored(target, mode, merge, depth_bound, state_bound) -> ExplorationResult:
    if isinstance(target, ExplorationResult):
        return target
    return explore(target, mode, CANONICAL, merge, depth_bound, state_bound, collapse=False)


def check_inductive_invariant(e, depth_bound: int = DEPTH_BOUND,
                              mode: Mode = Mode.CONSERVATIVE,
                              merge: MergePolicy = VERSIONED,
                              state_bound: int = STATE_BOUND) -> CheckReport:
    """Subsumption and accessibility at every explored state."""
    res = _explored(e, mode, merge, depth_bound, state_bound)
    report = CheckReport("inductive invariant", bound_exceeded=res.bound_exceeded)
    for s in res.states:
        report.checked += 1
        if not check_S_G(s):
            report.fail("subsumption violated", res.trace_to(s))
        elif not check_A_G(s):
            report.fail("accessibility violated", res.trace_to(s))
    return report


def check_mode_equivalence(e, depth_bound: int = DEPTH_BOUND,
                           merge: MergePolicy = VERSIONED,
                           state_bound: int = STATE_BOUND) -> CheckReport:
    """Conservative and relaxed side conditions agree on reachable states."""
    res = _explored(e, Mode.CONSERVATIVE, merge, depth_bound, state_bound)
    report = CheckReport("mode equivalence", bound_exceeded=res.bound_exceeded)
    for s in res.states:
        report.checked += 1
        cons = enabled_steps(s, Mode.CONSERVATIVE, merge=merge)
        try:
            relaxed = enabled_steps(s, Mode.RELAXED, merge=merge)
        except UndefinedRead as exc:
            report.fail(f"relaxed read undefined: {exc}", res.trace_to(s))
            continue
        if [(l.actor, l.rule) for l, _ in cons] != [(l.actor, l.rule) for l, _ in relaxed]:
            report.fail("enabled rules differ", res.trace_to(s))
            continue
        for (_, a), (_, b) in zip(cons, relaxed):
            if equivalent(a, b) is None:
                report.fail("successors not equivalent", res.trace_to(s))
                break
    return report


class _Closer:
    """Memoised successors plus cached renaming-equivalence tests."""

    def __init__(self, mode: Mode, merge: MergePolicy):
        self.mode = mode
        self.merge = merge
        self.memo: Dict[GlobalState, List[Step]] = {}
        self.fps: Dict[GlobalState, int] = {}

    def succ(self, s: GlobalState) -> List[Step]:
        got = self.memo.get(s)
        if got is None:
            got = self.memo[s] = successors(s, self.mode, merge=self.merge)
        return got

    def fp(self, s: GlobalState) -> int:
        got = self.fps.get(s)
        if got is None:
            got = self.fps[s] = fingerprint(s)
        return got

    def equiv(self, a: GlobalState, b: GlobalState) -> bool:
        if a == b:
            return True
        return self.fp(a) == self.fp(b) and equivalent(a, b) is not None


def check_strong_local_confluence(e, depth_bound: int = DEPTH_BOUND,
                                  mode: Mode = Mode.CONSERVATIVE,
                                  merge: MergePolicy = VERSIONED,
                                  state_bound: int = STATE_BOUND) -> CheckReport:
    """Every one-step divergence closes within one step per side, up to renaming.

    For ``s2 <-_r s1 ->_r' s2'`` the closing steps are taken by ``r'`` from
    ``s2`` and by ``r`` from ``s2'`` (or no step at all).
    """
    res = _explored(e, mode, merge, depth_bound, state_bound)
    report = CheckReport("strong local confluence", bound_exceeded=res.bound_exceeded)
    closer = _Closer(mode, merge)
    for s1 in res.states:
        succ = closer.succ(s1)
        for (la, a), (lb, b) in combinations(succ, 2):
            report.checked += 1
            if a == b:
                continue
            left = [a] + [t for l, t in closer.succ(a) if l.actor == lb.actor]
            right = [b] + [t for l, t in closer.succ(b) if l.actor == la.actor]
            if not any(closer.equiv(x, y) for x in left for y in right):
                report.fail(f"divergence {la} / {lb} does not close", res.trace_to(s1))
    return report


def _rename_label(ren: Renaming, label: StepLabel) -> StepLabel:
    alloc = label.allocated
    if label.rule == "fork":
        alloc = ren.rev(alloc)
    elif label.rule == "new":
        alloc = ren.loc(alloc)
    return replace(label, actor=ren.rev(label.actor), allocated=alloc)


def mimics(s: GlobalState, ren: Renaming, mode: Mode = Mode.CONSERVATIVE,
           merge: MergePolicy = VERSIONED) -> Optional[str]:
    """``None`` if the steps of ``s`` and of its renaming correspond exactly."""
    if not ren.is_bijective():
        raise ValueError("mimicking is only defined for bijective renamings")
    inv = ren.inverse()
    rs = rename(ren, s)
    pairs = ((s, rs, ren), (rs, s, inv))
    for src, dst, w in pairs:
        for label, t in enabled_steps(src, mode, merge=merge):
            moved = _rename_label(w, label)
            try:
                u = step(dst, moved, mode, merge=merge)
            except NotEnabled:
                return f"{moved} not enabled in renamed state"
            if u != rename(w, t):
                return f"{moved} reaches a state that is not the renamed successor"
    if len(enabled_steps(s, mode, merge=merge)) != len(enabled_steps(rs, mode, merge=merge)):
        return "different number of enabled steps"
    return None


def sample_swaps(s: GlobalState, rng: random.Random, count: int) -> List[Renaming]:
    """Random revision and location swaps, including one fresh identifier each."""
    revs = sorted(rid(s))
    locs = sorted(lid(s))
    for pool in (revs, locs):
        pool.append(max(pool, default=-1) + 1)
        if len(pool) < 2:
            pool.append(pool[-1] + 1)
    out = []
    for _ in range(count):
        if rng.random() < 0.5:
            a, b = rng.sample(revs, 2)
            out.append(Renaming.swap_rev(a, b))
        else:
            a, b = rng.sample(locs, 2)
            out.append(Renaming.swap_loc(a, b))
    return out


def check_mimicking(e, renamings: Optional[Sequence[Renaming]] = None,
                    depth_bound: int = DEPTH_BOUND, mode: Mode = Mode.CONSERVATIVE,
                    merge: MergePolicy = VERSIONED, swaps_per_state: int = 2,
                    max_states: Optional[int] = None, seed: int = 0,
                    state_bound: int = STATE_BOUND) -> CheckReport:
    """Renaming commutes with the step relation on explored states.

    Without explicit ``renamings``, swaps are sampled per state.
    """
    for w in renamings or ():
        if not w.is_bijective():
            raise ValueError("mimicking requires bijective renamings")
    res = _explored(e, mode, merge, depth_bound, state_bound)
    report = CheckReport("mimicking", bound_exceeded=res.bound_exceeded)
    rng = random.Random(seed)
    states = res.states
    if max_states is not None and len(states) > max_states:
        states = rng.sample(states, max_states)
    for s in states:
        ws = list(renamings) if renamings is not None else sample_swaps(s, rng, swaps_per_state)
        for w in ws:
            report.checked += 1
            problem = mimics(s, w, mode, merge)
            if problem is not None:
                report.fail(f"{problem} under {w}", res.trace_to(s))
    return report


def check_confluence(res: ExplorationResult) -> CheckReport:
    """Each explored state reaches maximal states from a single class."""
    report = CheckReport("confluence", bound_exceeded=res.bound_exceeded)
    classes = equivalence_classes(res.maximal_states)
    cls_of = {s: i for i, c in enumerate(classes) for s in c}
    reach: Dict[GlobalState, frozenset] = {s: frozenset((cls_of[s],)) for s in res.maximal_states}
    changed = True
    states = [s for s in res.states if s in res.graph]
    while changed:
        changed = False
        for s in reversed(states):
            acc = frozenset().union(*(reach.get(t, frozenset()) for _, t in res.graph[s]))
            if acc != reach.get(s, frozenset()):
                reach[s] = acc
                changed = True
    for s in states:
        report.checked += 1
        if len(reach.get(s, ())) > 1:
            report.fail("state reaches non-equivalent maximal states", res.trace_to(s))
    return report


# ---------------------------------------------------------------------------
# Single runs


def run(e: Expr, mode: Mode = Mode.CONSERVATIVE, alloc: AllocPolicy = CANONICAL,
        merge: MergePolicy = VERSIONED, max_steps: int = DEPTH_BOUND) -> Tuple[Trace, str]:
    """Execute one maximal trace.

    The canonical scheduler always steps the lowest enabled revision; with
    ``Arbitrary(seed)`` the revision is chosen by a generator seeded the same
    way.  The outcome is ``terminal``, ``deadlock``, ``epsilon`` or ``bound``.
    """
    s = initial_state(e)
    rng = random.Random(alloc.seed) if isinstance(alloc, Arbitrary) else None
    steps = []
    for _ in range(max_steps):
        options = enabled_steps(s, mode, alloc, merge)
        if not options:
            return Trace(initial_state(e), tuple(steps)), classify(s)
        label, s = options[0] if rng is None else rng.choice(options)
        steps.append((label, s))
    trace = Trace(initial_state(e), tuple(steps))
    return trace, ("bound" if enabled_steps(s, mode, alloc, merge) else classify(s))


# ---------------------------------------------------------------------------
# Revision diagrams


def emit_revision_diagram(trace: Trace) -> str:
    """Graphviz rendering: solid edges inside revisions, dotted fork/join edges."""
    lines = [
        "digraph revisions {",
        "  rankdir=LR;",
        '  node [shape=point, width=0.12];',
    ]
    edges = []
    current: Dict[int, str] = {}
    for r in trace.initial:
        name = f"r{r}_0"
        lines.append(f'  {name} [xlabel="r{r}"];')
        current[r] = name
    prev = trace.initial
    for i, (label, state) in enumerate(trace.steps, start=1):
        r = label.actor
        node = f"r{r}_{i}"
        if label.rule == "joinEps":
            lines.append(f'  {node} [shape=box, width=0, label="ε-collapse"];')
        else:
            lines.append(f"  {node};")
        edges.append(f'  {current[r]} -> {node} [label="{label.rule}"];')
        current[r] = node
        if label.rule == "fork":
            child = label.allocated
            cnode = f"r{child}_{i}"
            lines.append(f'  {cnode} [xlabel="r{child}"];')
            edges.append(f"  {node} -> {cnode} [style=dotted];")
            current[child] = cnode
        elif label.rule == "join":
            _, redex = decompose(prev[r].expr)
            joinee = redex.rev.id
            edges.append(f"  {current.pop(joinee)} -> {node} [style=dotted];")
        elif label.rule == "joinEps":
            current.clear()
        prev = state
    return "\n".join(lines + edges + ["}"]) + "\n"


# ---------------------------------------------------------------------------
# JSON dumps


def _store_json(st: Store):
    return [[l, pretty(v)] for l, v in st.items()]


def state_to_json(s: GlobalState):
    return [
        {"rid": r, "snapshot": _store_json(L.sigma), "local": _store_json(L.tau),
         "expr": pretty(L.expr)}
        for r, L in s.items()
    ]


def _reparse(text: str) -> Expr:
    return parse(text, allow_ids=True, extended=True)


def state_from_json(data) -> GlobalState:
    def store(items):
        return Store((int(l), _reparse(v)) for l, v in items)

    return GlobalState(
        (int(d["rid"]), LocalState(store(d["snapshot"]), store(d["local"]), _reparse(d["expr"])))
        for d in data
    )


def trace_to_json(t: Trace):
    return {
        "initial": state_to_json(t.initial),
        "steps": [
            {"rule": l.rule, "actor": l.actor, "allocated": l.allocated,
             "state": state_to_json(s)}
            for l, s in t.steps
        ],
    }


def trace_from_json(data) -> Trace:
    steps = tuple(
        (StepLabel(d["actor"], d["rule"], d["allocated"]), state_from_json(d["state"]))
        for d in data["steps"]
    )
    return Trace(state_from_json(data["initial"]), steps)


def format_state(s: GlobalState) -> str:
    """Human-readable one-line rendering of a global state."""
    if not s:
        return "ε"

    def store(st: Store) -> str:
        if not st:
            return "ε"
        return "{" + ", ".join(f"l{l} ↦ {pretty(v)}" for l, v in st.items()) + "}"

    parts = [f"r{r} ↦ ⟨{store(L.sigma)}, {store(L.tau)}, {pretty(L.expr)}⟩"
             for r, L in s.items()]
    return "{" + ", ".join(parts) + "}"


__all__ = [
    "Trace", "successors", "classify", "ExplorationResult", "explore",
    "explore_state", "equivalence_classes", "Determinate", "Indeterminate",
    "Unknown", "DeterminacyVerdict", "verdict_of", "check_determinacy",
    "OutOfDomain", "check_S", "check_S_G", "check_A", "check_A_G", "CheckReport",
    "check_inductive_invariant", "check_mode_equivalence",
    "check_strong_local_confluence", "mimics", "sample_swaps",
    "check_mimicking", "check_confluence", "run", "emit_revision_diagram",
    "state_to_json", "state_from_json", "trace_to_json", "trace_from_json",
    "format_state", "DEPTH_BOUND", "STATE_BOUND",
]
