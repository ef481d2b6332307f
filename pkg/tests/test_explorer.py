"""End-to-end exploration: verdicts, revisits, caps, fragment checks."""

from awaitmc import ExploreOptions, explore
from awaitmc.corpus import get_case
from awaitmc.explorer import static_fragment_scan
from awaitmc.surface import parse_program

SB = get_case("store-buffering").program()


def test_store_buffering_separates_models():
    assert explore(SB, "sc").kind == "success"
    v = explore(SB, "ramm")
    assert v.kind == "safety-violation"
    # the violating read saw a stale initial value in both threads
    assert v.graph.events[v.error_event].__class__.__name__ == "ErrorLabel"


def test_revisit_finds_late_writes():
    # T1 reads before T0 has written anything: only revisiting makes the
    # message-passing outcome reachable.
    prog = parse_program(
        """
shared x = 0
thread A:
    store_rlx x, 1
end

thread B [r = 0]:
    load_rlx r, x
    assert r == 0
end
"""
    )
    # the assert fails exactly when B's read is revisited by A's write
    assert explore(prog, "ramm").kind == "safety-violation"
    assert explore(prog, "sc").kind == "safety-violation"


def test_spin_success_and_graph_counts():
    case = get_case("mcs-partial")
    v = explore(case.program(), "ramm", ExploreOptions(collect_complete=True))
    assert v.kind == "success"
    assert v.stats.complete == len(v.complete_graphs) > 0
    assert v.stats.bound_violations == []


def test_at_violation_reports_blocked_read():
    case = get_case("mcs-partial-rlx")
    v = explore(case.program(), "ramm")
    assert v.kind == "at-violation"
    assert v.graph.rf[v.blocked_read] is None


def test_all_violations_collects_every_witness():
    case = get_case("store-buffering")
    v = explore(case.program(), "ramm", ExploreOptions(all_violations=True))
    assert v.kind == "safety-violation"
    assert len(v.all_found) >= 1
    assert all(w.kind == "safety-violation" for w in v.all_found)


def test_graph_budget_is_inconclusive():
    v = explore(SB, "ramm", ExploreOptions(max_graphs=1))
    assert v.kind == "inconclusive"
    assert "budget" in v.reason


def test_fragment_error_for_effectful_await():
    prog = parse_program(
        """
shared turn = 0
shared count = 0
thread T1 [r = 0, t = 0]:
    do:
        let r = r + 1
        store_rlx count, r
        load_rlx t, turn
    await_while t == 0
end

thread T2:
    store_rlx turn, 1
end
"""
    )
    assert static_fragment_scan(prog)  # flagged syntactically as well
    v = explore(prog, "ramm")
    assert v.kind == "fragment-error"
    assert v.violations


def test_every_corpus_run_respects_bounds():
    for case_name in ("mcs-partial", "mcs-partial-rlx", "ticket", "dpdk-mcs-bug"):
        case = get_case(case_name)
        for model in case.expected:
            v = explore(case.program(), model)
            assert v.stats.bound_violations == [], case_name
