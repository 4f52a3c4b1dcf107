import json
import subprocess
import sys

import pytest

from revcalc import programs
from revcalc.analysis import trace_from_json
from revcalc.cli import main


def prog(name):
    return str(programs.path(name))


def cli(capsys, *args):
    code = main(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_run_examples(capsys):
    code, out, _ = cli(capsys, "run", prog("versioned"))
    assert code == 0 and "l0 ↦ 2" in out
    code, out, _ = cli(capsys, "run", prog("unit"))
    assert code == 0 and "{r0 ↦ ⟨ε, ε, unit⟩}" in out
    code, out, _ = cli(capsys, "run", prog("cumulative"), "--merge", "cumulative")
    assert code == 0 and "l0 ↦ 7" in out


@pytest.mark.parametrize("name,code", [("double_join", 3), ("stuck_child", 2)])
def test_run_exit_codes(capsys, name, code):
    assert cli(capsys, "run", prog(name))[0] == code


def test_run_bound(capsys):
    assert cli(capsys, "run", prog("mesh"), "--depth", "4")[0] == 4


def test_counterexample_run_branches(capsys):
    codes = {cli(capsys, "run", prog("counterexample"), "--mode", "weak-fork",
                 "--alloc", f"arbitrary:{seed}")[0] for seed in range(40)}
    # the reuse branch ends stuck (2), the other collapses (3)
    assert codes == {2, 3}
    assert cli(capsys, "run", prog("counterexample"), "--mode", "weak-fork",
               "--alloc", "arbitrary:7")[0] == 3


def test_parse_errors(capsys, tmp_path):
    bad = tmp_path / "bad.rev"
    bad.write_text("fun x -> (x")
    code, _, err = cli(capsys, "run", str(bad))
    assert code == 1 and "1:" in err
    ids = tmp_path / "ids.rev"
    ids.write_text("rjoin #r1")
    assert cli(capsys, "check", str(ids))[0] == 1
    assert cli(capsys, "run", str(tmp_path / "missing.rev"))[0] == 1


def test_check(capsys):
    code, out, _ = cli(capsys, "check", prog("counterexample"), "--mode", "weak-fork")
    assert code == 5
    assert "witness 1: ε" in out and "witness 2: {r0" in out
    assert cli(capsys, "check", prog("counterexample"))[0] == 0
    assert cli(capsys, "check", prog("unit"))[0] == 0
    assert cli(capsys, "check", prog("mesh"), "--states", "20")[0] == 4


def test_check_json(capsys):
    code, out, _ = cli(capsys, "check", prog("counterexample"), "--mode", "weak-fork",
                       "--format", "json")
    data = json.loads(out)
    assert code == 5 and data["verdict"] == "indeterminate"
    traces = [trace_from_json(w) for w in data["witnesses"]]
    assert not traces[0].final or not traces[1].final


def test_audit(capsys):
    code, out, _ = cli(capsys, "audit", prog("unit"), prog("versioned"))
    assert code == 0 and "FAILED" not in out
    code, out, _ = cli(capsys, "audit", prog("merge_locs"), "--merge", "id-sensitive")
    assert code == 6 and "mimicking: FAILED" in out
    dump = json.loads(out[out.index("["):])
    assert dump[0]["check"] == "mimicking" and dump[0]["trace"]["steps"]


def test_diagram_and_out(capsys, tmp_path):
    target = tmp_path / "d.dot"
    assert cli(capsys, "diagram", prog("versioned"), "--out", str(target))[0] == 0
    text = target.read_text(encoding="utf-8")
    assert text.startswith("digraph") and text.count("style=dotted") == 2


def test_parse_command(capsys):
    code, out, _ = cli(capsys, "parse", prog("counterexample"))
    assert code == 0
    assert out.strip() == "(fun x -> rfork rjoin x (rjoin x rfork unit)) rfork unit"


def test_output_is_deterministic(capsys):
    for args in (["explore", prog("workers")], ["check", prog("counterexample"), "--mode",
                 "weak-fork", "--format", "json"]):
        first = cli(capsys, *args)
        assert cli(capsys, *args) == first
        assert cli(capsys, *args, "--jobs", "4") == first


def test_console_script():
    r = subprocess.run([sys.executable, "-m", "revcalc", "check", prog("unit")],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("determinate")
