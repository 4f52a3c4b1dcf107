"""Explore every bundled program and tabulate states, outcomes and checker results."""

import argparse
import time

from revcalc import programs
from revcalc.analysis import (
    check_confluence, check_inductive_invariant, check_mimicking,
    check_mode_equivalence, check_strong_local_confluence, equivalence_classes,
    explore,
)
from revcalc.semantics import CUMULATIVE, VERSIONED, Mode


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mode", choices=[m.value for m in Mode], default="conservative")
    ap.add_argument("--mimic-states", type=int, default=100)
    args = ap.parse_args()
    mode = Mode(args.mode)

    header = f"{'program':<15}{'states':>8}{'max':>5}{'classes':>8}  checks            secs"
    print(header)
    print("-" * len(header))
    total = 0
    for name in programs.names():
        e = programs.load(name)
        merge = CUMULATIVE if name == "cumulative" else VERSIONED
        t0 = time.perf_counter()
        res = explore(e, mode, merge=merge, collapse=False)
        reports = [check_inductive_invariant(res),
                   check_strong_local_confluence(res, mode=mode, merge=merge),
                   check_mimicking(res, mode=mode, merge=merge, max_states=args.mimic_states),
                   check_confluence(res)]
        if mode is Mode.CONSERVATIVE:
            reports.append(check_mode_equivalence(res, merge=merge))
        marks = "".join("." if r else "F" for r in reports)
        classes = len(equivalence_classes(res.maximal_states))
        total += res.state_count
        print(f"{name:<15}{res.state_count:>8}{len(res.maximal_states):>5}{classes:>8}  "
              f"{marks:<18}{time.perf_counter() - t0:5.1f}")
    print(f"total states: {total}")


if __name__ == "__main__":
    main()
