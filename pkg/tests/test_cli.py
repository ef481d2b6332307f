"""Command-line interface: exit codes, formats, determinism."""

import json

import pytest

from awaitmc.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_check_success_exit_zero(capsys):
    code, out, _ = run(capsys, "check", "--case", "mcs-partial")
    assert code == 0
    assert "verdict: success" in out


def test_check_violation_exit_one(capsys):
    code, out, _ = run(capsys, "check", "--case", "mcs-partial-rlx")
    assert code == 1
    assert "at-violation" in out
    assert "⚡" in out  # the blocked read is shown in the counterexample


def test_check_inconclusive_exit_three(capsys):
    code, out, _ = run(capsys, "check", "--case", "ttas", "--max-graphs", "2")
    assert code == 3
    assert "inconclusive" in out


def test_env_var_overrides_default_cap(capsys, monkeypatch):
    monkeypatch.setenv("AWAITMC_MAX_GRAPHS", "2")
    code, out, _ = run(capsys, "check", "--case", "ttas")
    assert code == 3
    assert "inconclusive" in out
    # an explicit flag still wins over the environment
    code, _, _ = run(capsys, "check", "--case", "ttas", "--max-graphs", "1000000")
    assert code == 0


def test_bad_file_exit_two(capsys, tmp_path):
    code, _, err = run(capsys, "check", str(tmp_path / "missing.litmus"))
    assert code == 2
    bad = tmp_path / "bad.litmus"
    bad.write_text("shared x = 0\nthread T []:\n    bogus\nend\n")
    code, _, err = run(capsys, "check", str(bad))
    assert code == 2
    assert "error" in err


def test_check_reads_surface_file(capsys, tmp_path):
    src = tmp_path / "sb.litmus"
    src.write_text(
        "shared x = 0\nthread T [r = 0]:\n    load_rlx r, x\n    assert r == 0\nend\n"
    )
    code, out, _ = run(capsys, "check", str(src), "--model", "sc")
    assert code == 0


def test_structured_output_is_deterministic(capsys):
    outputs = []
    for _ in range(2):
        code, out, _ = run(capsys, "check", "--case", "store-buffering",
                           "--model", "ramm", "--format", "structured")
        assert code == 1
        outputs.append(out)
    assert outputs[0] == outputs[1]
    payload = json.loads(outputs[0])
    assert payload["verdict"] == "safety-violation"
    assert "seconds" not in payload["stats"]


def test_dump_graph_roundtrip(capsys, tmp_path):
    code, out, _ = run(capsys, "check", "--case", "mcs-partial-rlx",
                       "--format", "graph-file")
    assert code == 1
    path = tmp_path / "witness.json"
    path.write_text(out)
    code, dot, _ = run(capsys, "dump-graph", str(path))
    assert code == 0
    assert dot.startswith("digraph")
    code, text, _ = run(capsys, "dump-graph", str(path), "--format", "text")
    assert code == 0
    assert "mo[locked]" in text


def test_dump_graph_without_witness(capsys, tmp_path):
    path = tmp_path / "no-graph.json"
    path.write_text(json.dumps({"verdict": "success"}))
    code, _, err = run(capsys, "dump-graph", str(path))
    assert code == 2
    assert "no counterexample" in err


def test_corpus_command(capsys):
    code, out, _ = run(capsys, "corpus")
    assert code == 0
    assert "FAIL" not in out


def test_optimize_command(capsys):
    code, out, _ = run(capsys, "optimize", "--case", "mcs-partial",
                       "--strategy", "exhaustive", "--audit")
    assert code == 0
    assert "T1.1.0: rel" in out
    assert "T2.0.0: acq" in out
    assert "probe" in out
