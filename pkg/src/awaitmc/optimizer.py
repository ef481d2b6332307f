"""Search for maximally relaxed barrier assignments.

Every mode-carrying slot in a program (atomic access modes, fence modes,
and separately the success/failure modes of a compare-and-swap) is a
*barrier site*.  An *assignment* maps sites to modes no stronger than any
the optimizer has already accepted — the optimizer only ever weakens, and a
fence relaxed to ``rlx`` is effectively removed.

Two strategies:

* ``greedy`` — repeatedly pick the strongest unpinned site and keep the
  weakest mode that still verifies, until a fixpoint;
* ``exhaustive`` — enumerate all assignments over the unpinned sites and
  return every verified assignment that is minimal in the pointwise mode
  lattice.

Verification of a candidate is a full exploration run under the chosen
model; every probe is recorded in an audit log.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace as dc_replace
from typing import Optional, Sequence

from .explorer import ExploreOptions, explore
from .lang import (
    FenceTpl,
    GuardedEvent,
    Mode,
    Program,
    ReadTpl,
    RmwKind,
    Statement,
    Step,
    Thread,
    UpdateTpl,
    WriteTpl,
    mode_leq,
)

_READ_MODES = (Mode.RLX, Mode.ACQ, Mode.SC)
_WRITE_MODES = (Mode.RLX, Mode.REL, Mode.SC)
_ALL_MODES = (Mode.RLX, Mode.REL, Mode.ACQ, Mode.SC)


@dataclass(frozen=True)
class BarrierSite:
    thread: int
    stmt: int
    case: int
    slot: str  # "main" or "fail" (cas failure mode)
    kind: str  # read | write | update | fence
    current: Mode

    def name(self, program: Program) -> str:
        tname = program.threads[self.thread].name
        suffix = "" if self.slot == "main" else f".{self.slot}"
        return f"{tname}.{self.stmt}.{self.case}{suffix}"

    @property
    def applicable(self) -> tuple[Mode, ...]:
        if self.kind == "read":
            return _READ_MODES
        if self.kind == "write":
            return _WRITE_MODES
        return _ALL_MODES


def collect_sites(program: Program) -> list[BarrierSite]:
    sites: list[BarrierSite] = []
    for ti, thread in enumerate(program.threads):
        for si, stmt in enumerate(thread.body):
            if not isinstance(stmt, Step):
                continue
            for ci, (_, tpl) in enumerate(stmt.event.cases):
                if isinstance(tpl, ReadTpl):
                    sites.append(BarrierSite(ti, si, ci, "main", "read", tpl.mode))
                elif isinstance(tpl, WriteTpl):
                    sites.append(BarrierSite(ti, si, ci, "main", "write", tpl.mode))
                elif isinstance(tpl, UpdateTpl):
                    sites.append(BarrierSite(ti, si, ci, "main", "update", tpl.mode))
                    if tpl.kind is RmwKind.CAS:
                        sites.append(
                            BarrierSite(ti, si, ci, "fail", "read", tpl.fail_mode)
                        )
                elif isinstance(tpl, FenceTpl):
                    sites.append(BarrierSite(ti, si, ci, "main", "fence", tpl.mode))
    return sites


Assignment = dict[BarrierSite, Mode]


def apply_assignment(program: Program, assignment: Assignment) -> Program:
    by_pos: dict[tuple[int, int, int], dict[str, Mode]] = {}
    for site, mode in assignment.items():
        by_pos.setdefault((site.thread, site.stmt, site.case), {})[site.slot] = mode

    threads = []
    for ti, thread in enumerate(program.threads):
        body: list[Statement] = []
        for si, stmt in enumerate(thread.body):
            if not isinstance(stmt, Step):
                body.append(stmt)
                continue
            cases = []
            for ci, (guard, tpl) in enumerate(stmt.event.cases):
                slots = by_pos.get((ti, si, ci))
                if slots:
                    if isinstance(tpl, (ReadTpl, WriteTpl, FenceTpl)) and "main" in slots:
                        tpl = dc_replace(tpl, mode=slots["main"])
                    elif isinstance(tpl, UpdateTpl):
                        if "main" in slots:
                            tpl = dc_replace(tpl, mode=slots["main"])
                        if "fail" in slots:
                            tpl = dc_replace(tpl, fail_mode=slots["fail"])
                cases.append((guard, tpl))
            body.append(Step(GuardedEvent(tuple(cases)), stmt.update))
        threads.append(Thread(thread.name, thread.registers, tuple(body)))
    return Program(tuple(threads), program.shared_init)


def count_modes(program: Program) -> tuple[int, int, int]:
    """(acquire, release, sc) barrier counts; relaxed slots do not count."""
    n_acq = n_rel = n_sc = 0
    for site in collect_sites(program):
        if site.current is Mode.ACQ:
            n_acq += 1
        elif site.current is Mode.REL:
            n_rel += 1
        elif site.current is Mode.SC:
            n_sc += 1
    return (n_acq, n_rel, n_sc)


@dataclass
class Probe:
    assignment: dict  # site name -> mode value
    verdict: str


@dataclass
class OptimizeResult:
    strategy: str
    sites: list[BarrierSite]
    pinned: list[BarrierSite]
    minimal: list[Assignment]  # for greedy: a single entry
    audit: list[Probe] = field(default_factory=list)

    def programs(self, program: Program) -> list[Program]:
        return [apply_assignment(program, a) for a in self.minimal]


def _matches_pin(site: BarrierSite, program: Program, pins: Sequence[str]) -> bool:
    name = site.name(program)
    return any(name == p or name.startswith(p + ".") for p in pins)


def _assignment_leq(a: Assignment, b: Assignment) -> bool:
    return all(mode_leq(a[s], b[s]) for s in a)


class Optimizer:
    def __init__(
        self,
        program: Program,
        model: str = "ramm",
        pins: Sequence[str] = (),
        explore_options: Optional[ExploreOptions] = None,
    ):
        self.program = program
        self.model = model
        self.options = explore_options or ExploreOptions()
        all_sites = collect_sites(program)
        self.pinned = [s for s in all_sites if _matches_pin(s, program, pins)]
        self.sites = [s for s in all_sites if s not in self.pinned]
        self.audit: list[Probe] = []

    def _verifies(self, assignment: Assignment) -> bool:
        candidate = apply_assignment(self.program, assignment)
        opts = ExploreOptions(
            max_graphs=self.options.max_graphs,
            max_seconds=self.options.max_seconds,
            wasteful_filter=self.options.wasteful_filter,
            check_bounded_effect=self.options.check_bounded_effect,
        )
        verdict = explore(candidate, self.model, opts)
        self.audit.append(
            Probe(
                {s.name(self.program): m.value for s, m in sorted(
                    assignment.items(), key=lambda kv: kv[0].name(self.program))},
                verdict.kind,
            )
        )
        return verdict.kind == "success"

    def greedy(self) -> OptimizeResult:
        current: Assignment = {s: s.current for s in self.sites}
        if not self._verifies(current):
            raise ValueError("program does not verify at its starting modes")
        changed = True
        while changed:
            changed = False
            ordered = sorted(
                self.sites,
                key=lambda s: (-current[s].strength, s.thread, s.stmt, s.case, s.slot),
            )
            for site in ordered:
                weaker = [
                    m
                    for m in site.applicable
                    if m != current[site] and mode_leq(m, current[site])
                ]
                weaker.sort(key=lambda m: -m.strength)
                best: Optional[Mode] = None
                for m in weaker:
                    trial = dict(current)
                    trial[site] = m
                    if self._verifies(trial):
                        best = m
                if best is not None:
                    current[site] = best
                    changed = True
        return OptimizeResult("greedy", self.sites, self.pinned, [current], self.audit)

    def exhaustive(self) -> OptimizeResult:
        verified: list[Assignment] = []
        for combo in itertools.product(*(s.applicable for s in self.sites)):
            assignment = dict(zip(self.sites, combo))
            # never strengthen beyond the declared modes
            if any(not mode_leq(m, s.current) for s, m in assignment.items()):
                continue
            if self._verifies(assignment):
                verified.append(assignment)
        minimal = [
            a
            for a in verified
            if not any(b is not a and _assignment_leq(b, a) and b != a for b in verified)
        ]
        return OptimizeResult("exhaustive", self.sites, self.pinned, minimal, self.audit)

    def run(self, strategy: str) -> OptimizeResult:
        if strategy == "greedy":
            return self.greedy()
        if strategy == "exhaustive":
            return self.exhaustive()
        raise ValueError(f"unknown strategy {strategy!r}")
