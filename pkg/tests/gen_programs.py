"""Deterministic random program generation for differential testing.

Programs are built directly in the core representation: a few threads of
straight-line loads, stores, read-modify-writes and fences over one or two
shared locations.  No awaits and no assertions, so every execution
terminates and the interleaving oracle in :mod:`sc_oracle` applies.
"""

from __future__ import annotations

import random

from awaitmc.lang import (
    Const,
    Mode,
    Program,
    ReadResult,
    ReadTpl,
    RmwKind,
    Step,
    Thread,
    UpdateTpl,
    WriteTpl,
    FenceTpl,
    simple_event,
    simple_update,
)

_READ_MODES = (Mode.RLX, Mode.ACQ, Mode.SC)
_WRITE_MODES = (Mode.RLX, Mode.REL, Mode.SC)
_ALL_MODES = (Mode.RLX, Mode.REL, Mode.ACQ, Mode.SC)
_LOCS = ("x", "y")
_VALUES = (0, 1, 2)


def _random_statement(rng: random.Random, reg: str) -> Step:
    kind = rng.choice(("load", "store", "store", "rmw", "fence"))
    loc = rng.choice(_LOCS)
    if kind == "load":
        return Step(
            simple_event(ReadTpl(loc, rng.choice(_READ_MODES))),
            simple_update((reg, ReadResult())),
        )
    if kind == "store":
        return Step(
            simple_event(WriteTpl(loc, Const(rng.choice(_VALUES)), rng.choice(_WRITE_MODES)))
        )
    if kind == "rmw":
        rmw = rng.choice((RmwKind.XCHG, RmwKind.FAA, RmwKind.OR, RmwKind.CAS))
        if rmw is RmwKind.CAS:
            args = (Const(rng.choice(_VALUES)), Const(rng.choice(_VALUES)))
        else:
            args = (Const(rng.choice(_VALUES)),)
        return Step(
            simple_event(UpdateTpl(loc, rmw, args, rng.choice(_ALL_MODES),
                                   rng.choice(_READ_MODES))),
            simple_update((reg, ReadResult())),
        )
    return Step(simple_event(FenceTpl(rng.choice(_ALL_MODES))))


def random_program(rng: random.Random, max_threads: int = 3, max_events: int = 4) -> Program:
    n_threads = rng.randint(1, max_threads)
    threads = []
    for tid in range(n_threads):
        n_events = rng.randint(1, max_events)
        body = tuple(_random_statement(rng, f"r{i}") for i in range(n_events))
        registers = tuple((f"r{i}", 0) for i in range(n_events))
        threads.append(Thread(f"T{tid}", registers, body))
    return Program(tuple(threads), tuple((loc, 0) for loc in _LOCS))
