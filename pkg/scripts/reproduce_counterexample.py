"""Show that the weak fork condition breaks determinacy and the conservative one does not."""

import argparse

from revcalc import programs
from revcalc.analysis import Indeterminate, check_determinacy, emit_revision_diagram, format_state
from revcalc.semantics import Mode


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dot", help="write the diagram for the stuck witness here")
    args = ap.parse_args()

    P = programs.load("counterexample")
    for mode in (Mode.WEAK_FORK, Mode.CONSERVATIVE):
        v = check_determinacy(P, mode)
        print(f"{mode.value}: {type(v).__name__}")
        if isinstance(v, Indeterminate):
            for label, t in (("first", v.first_trace), ("second", v.second_trace)):
                print(f"  {label} witness: {format_state(t.final)}")
                for lab, s in t.steps:
                    print(f"    {lab}")
            if args.dot:
                stuck = v.second_trace if v.second else v.first_trace
                with open(args.dot, "w", encoding="utf-8") as f:
                    f.write(emit_revision_diagram(stuck))
        else:
            print(f"  outcome: {format_state(v.outcome)}")


if __name__ == "__main__":
    main()
