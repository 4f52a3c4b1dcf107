"""Run the two merge examples under both merge policies."""

from revcalc import programs
from revcalc.analysis import check_determinacy, format_state, run
from revcalc.semantics import CUMULATIVE, VERSIONED

for name in ("versioned", "cumulative"):
    e = programs.load(name)
    for policy in (VERSIONED, CUMULATIVE):
        label = getattr(policy, "name", "versioned")
        trace, outcome = run(e, merge=policy)
        verdict = type(check_determinacy(e, merge=policy)).__name__
        print(f"{name:<11} {label:<11} {outcome:<9} {verdict:<12} {format_state(trace.final)}")
