#!/usr/bin/env python3
"""Find maximally relaxed barrier assignments for the lock corpus.

Runs the barrier optimizer on the handover case (all sites free) and on the
test-and-test-and-set lock (with the symmetric thread and the critical
section pinned to keep the search small) and prints the minimal
assignments found.
"""

from __future__ import annotations

import argparse
import pathlib
import sys
import time

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from awaitmc.corpus import get_case  # noqa: E402
from awaitmc.optimizer import Optimizer, apply_assignment, count_modes  # noqa: E402

TTAS_PINS = ["T2", "T1.1", "T1.8", "T1.14", "T1.15", "T1.17", "T1.18"]


def run(case_name: str, strategy: str, pins: list[str]) -> None:
    case = get_case(case_name)
    program = case.program()
    opt = Optimizer(program, "ramm", pins=pins)
    started = time.monotonic()
    result = opt.run(strategy)
    elapsed = time.monotonic() - started
    print(f"== {case_name} ({strategy}, {len(opt.sites)} free sites, "
          f"{len(result.audit)} probes, {elapsed:.1f}s)")
    for assignment in result.minimal:
        relaxed = apply_assignment(program, assignment)
        n_acq, n_rel, n_sc = count_modes(relaxed)
        print(f"  minimal assignment: acq={n_acq} rel={n_rel} sc={n_sc}")
        for site in sorted(assignment, key=lambda s: s.name(program)):
            print(f"    {site.name(program)}: {assignment[site].value}")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--strategy", default="exhaustive",
                        choices=("greedy", "exhaustive"))
    args = parser.parse_args()
    run("mcs-partial", args.strategy, [])
    run("ttas", args.strategy, TTAS_PINS)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
