"""Acceptance gate: the ten headline behaviours of the checker.

Each test pins one externally meaningful result — reference verdicts on the
lock corpus, exact graph sets for the minimal handover, agreement with an
independent interleaving oracle, structural bounds, cut equivalence,
optimizer minimality, and output determinism — together with a wall-clock
budget.
"""

import json
import random
import time

import pytest

from awaitmc import ExploreOptions, explore
from awaitmc.cli import main as cli_main
from awaitmc.corpus import builtin_cases, get_case
from awaitmc.graph import INIT_THREAD, is_read, is_write, mem_loc
from awaitmc.lang import Mode, mode_leq
from awaitmc.loopmeta import cut_iteration, is_wasteful, wasteful_pairs
from awaitmc.memmodel import cons_ramm
from awaitmc.optimizer import Optimizer, apply_assignment
from awaitmc.replay import replay

from figures import access_summary, handover_spin, handover_success
from gen_programs import random_program
from sc_oracle import reachable_finals


class Budget:
    def __init__(self, seconds: float):
        self.seconds = seconds
        self.started = time.monotonic()

    def check(self):
        elapsed = time.monotonic() - self.started
        assert elapsed < self.seconds, f"budget exceeded: {elapsed:.1f}s > {self.seconds}s"


# -- 1. two-graph exactness for the no-queue handover -----------------------


def test_01_noq_complete_graph_set_is_exactly_two():
    budget = Budget(1.0)
    case = get_case("mcs-partial-noq")
    verdict = explore(case.program(), "ramm",
                      ExploreOptions(all_violations=True, collect_complete=True))
    assert len(verdict.complete_graphs) == 2
    got = {access_summary(g) for g in verdict.complete_graphs}
    mo = (("locked", ("init", (0, 0), (1, 0))),)
    writes = ((0, "locked", 1), (1, "locked", 0))
    one_failed_iteration = (
        ((0, "locked", 1, (0, 0)), (0, "locked", 0, (1, 0))), writes, mo)
    immediate_exit = (((0, "locked", 0, (1, 0)),), writes, mo)
    assert got == {one_failed_iteration, immediate_exit}
    budget.check()


# -- 2. await-termination verdicts on the handover --------------------------


def test_02_handover_verdicts_and_witness_shape():
    budget = Budget(5.0)
    assert explore(get_case("mcs-partial").program(), "ramm").kind == "success"
    verdict = explore(get_case("mcs-partial-rlx").program(), "ramm")
    assert verdict.kind == "at-violation"
    g = verdict.graph
    blocked = verdict.blocked_read
    assert mem_loc(g.events[blocked]) == "locked"
    assert g.rf[blocked] is None
    # T1's locked = 1 is modification-order maximal: nothing can unblock it
    last = g.mo_maximal("locked")
    assert last[0] == 0
    assert g.events[last].value == 1
    budget.check()


# -- 3. queue-lock handover regression (relaxed link-in store) ---------------


def test_03_queue_lock_regression():
    budget = Budget(60.0)
    assert explore(get_case("dpdk-mcs-bug").program(), "ramm").kind == "at-violation"
    assert explore(get_case("dpdk-mcs-fixed").program(), "ramm").kind == "success"
    budget.check()


# -- 4. handover regression with an unprotected critical section -------------


def test_04_critical_section_regression():
    budget = Budget(60.0)
    verdict = explore(get_case("huawei-mcs-bug").program(), "ramm")
    assert verdict.kind == "safety-violation"
    g = verdict.graph
    # both critical sections incremented from the same initial x: the
    # classic lost update behind the broken handover
    first_x_reads = []
    for tid in (0, 1):
        for eid in sorted(e for e in g.events if e[0] == tid):
            label = g.events[eid]
            if is_read(label) and not is_write(label) and mem_loc(label) == "x":
                first_x_reads.append(eid)
                break
    assert len(first_x_reads) == 2
    assert all(g.rf[r][0] == INIT_THREAD for r in first_x_reads)
    assert explore(get_case("huawei-mcs-fixed").program(), "ramm").kind == "success"
    budget.check()


# -- 5. consistency spot checks on the transcribed reference graphs ----------


def test_05_reference_graph_consistency():
    budget = Budget(1.0)
    assert cons_ramm(handover_success()) is True
    assert cons_ramm(handover_spin()) is False
    assert cons_ramm(handover_spin(Mode.RLX, Mode.RLX)) is True
    budget.check()


# -- 6. agreement with an independent interleaving oracle --------------------


def test_06_sc_matches_interleaving_oracle():
    budget = Budget(120.0)
    rng = random.Random(20260823)
    for i in range(50):
        prog = random_program(rng)
        oracle_finals, oracle_error = reachable_finals(prog)
        verdict = explore(prog, "sc", ExploreOptions(collect_complete=True))
        assert verdict.kind == "success", i
        finals = {frozenset(g.final_state().items()) for g in verdict.complete_graphs}
        assert finals == oracle_finals, i
        assert not oracle_error
    budget.check()


# -- 7. structural bounds hold on every explored graph -----------------------


def test_07_bounds_hold_across_corpus():
    for case in builtin_cases():
        for model in case.expected:
            verdict = explore(case.program(), model)
            assert verdict.stats.bound_violations == [], (case.name, model)


# -- 8. cutting a wasteful iteration preserves the execution -----------------


class _Enough(Exception):
    pass


def _collect_wasteful(case_name, want, out):
    case = get_case(case_name)
    program = case.program()

    def collect(g):
        if is_wasteful(program, g):
            out.append((program, g))
            if len(out) >= want:
                raise _Enough

    try:
        explore(program, "ramm",
                ExploreOptions(max_graphs=20_000, wasteful_filter=False,
                               check_bounded_effect=False, on_explored=collect))
    except _Enough:
        pass


def test_08_cut_equivalence_on_wasteful_graphs():
    budget = Budget(60.0)
    collected = []
    for name in ("mcs-partial-noq", "mcs-partial-rlx", "mcs-partial", "ticket"):
        _collect_wasteful(name, 30, collected)
        if len(collected) >= 30:
            break
    assert len(collected) >= 20
    for program, g in collected[:30]:
        before = replay(program, g)
        assert before.consistent
        it, _nxt = wasteful_pairs(program, g)[0]
        cut = cut_iteration(program, g, it.thread, it.ordinal)
        after = replay(program, cut)
        assert after.consistent
        assert after.has_error == before.has_error
    budget.check()


# -- 9. optimizer soundness and maximality -----------------------------------

TTAS_PINS = ["T2", "T1.1", "T1.8", "T1.14", "T1.15", "T1.17", "T1.18"]


def _assert_minimal(program, pins):
    opt = Optimizer(program, "ramm", pins=pins)
    result = opt.exhaustive()
    assert result.minimal
    for assignment in result.minimal:
        assert explore(apply_assignment(program, assignment), "ramm").kind == "success"
        for site in assignment:
            for weaker in site.applicable:
                if weaker == assignment[site] or not mode_leq(weaker, assignment[site]):
                    continue
                one_step = dict(assignment)
                one_step[site] = weaker
                relaxed = apply_assignment(program, one_step)
                assert explore(relaxed, "ramm").kind != "success", (
                    site.name(program), weaker)
    greedy = Optimizer(program, "ramm", pins=pins).greedy().minimal[0]
    assert any(greedy == a for a in result.minimal)


def test_09_optimizer_minimality():
    budget = Budget(300.0)
    _assert_minimal(get_case("mcs-partial").program(), [])
    _assert_minimal(get_case("ttas").program(), TTAS_PINS)
    budget.check()


# -- 10. deterministic structured output --------------------------------------


def test_10_structured_output_is_byte_identical(capsys):
    budget = Budget(60.0)
    for case in builtin_cases():
        for model in sorted(case.expected):
            outputs = []
            for _ in range(2):
                cli_main(["check", "--case", case.name, "--model", model,
                          "--format", "structured"])
                outputs.append(capsys.readouterr().out)
            assert outputs[0] == outputs[1], (case.name, model)
            json.loads(outputs[0])  # well-formed
    budget.check()
