#!/usr/bin/env python3
"""Regenerate the on-disk case corpus from the built-in definitions.

Writes one surface-dialect file per case into cases/ plus an index.json
mapping each case to its expected verdict per memory model.  The test suite
asserts that the tree is in sync with the built-ins, so rerun this script
after editing awaitmc.corpus.
"""

from __future__ import annotations

import argparse
import json
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from awaitmc.corpus import builtin_cases  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--out",
        type=pathlib.Path,
        default=pathlib.Path(__file__).resolve().parents[1] / "cases",
        help="output directory (default: <repo>/cases)",
    )
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    index = {}
    for case in builtin_cases():
        path = args.out / f"{case.name}.litmus"
        path.write_text(case.source)
        index[case.name] = {
            "file": path.name,
            "expected": dict(sorted(case.expected.items())),
            "description": case.description,
        }
        print(f"wrote {path}")
    index_path = args.out / "index.json"
    index_path.write_text(json.dumps(index, indent=1, sort_keys=True) + "\n")
    print(f"wrote {index_path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
