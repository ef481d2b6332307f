"""Built-in case corpus and its on-disk mirror."""

import json
import pathlib

import pytest

from awaitmc.corpus import builtin_cases, generate_client, get_case
from awaitmc.lang import validate
from awaitmc.surface import parse_program

CASES_DIR = pathlib.Path(__file__).resolve().parents[1] / "cases"


def test_all_cases_parse_and_validate():
    for case in builtin_cases():
        prog = case.program()
        assert validate(prog) == [], case.name
        assert len(prog.threads) >= 1


def test_get_case_unknown():
    with pytest.raises(KeyError):
        get_case("no-such-case")


def test_disk_corpus_matches_builtins():
    index = json.loads((CASES_DIR / "index.json").read_text())
    cases = {c.name: c for c in builtin_cases()}
    assert set(index) == set(cases)
    for name, entry in index.items():
        case = cases[name]
        assert entry["expected"] == case.expected
        on_disk = (CASES_DIR / entry["file"]).read_text()
        assert on_disk == case.source, f"cases/{entry['file']} is stale; rerun scripts/regen_cases.py"
        assert parse_program(on_disk) == case.program()


def test_generated_clients():
    for primitive in ("ticket", "ttas", "cas"):
        prog = parse_program(generate_client(primitive, threads=2, acquisitions=1))
        assert validate(prog) == []
        assert len(prog.threads) == 2
    with pytest.raises(ValueError):
        generate_client("qspinlock", threads=2, acquisitions=1)
