"""Consistency predicates for the two memory models."""

import random

import pytest
from hypothesis import given, settings, strategies as st

from awaitmc import ExploreOptions, explore
from awaitmc.graph import ExecutionGraph, ReadLabel, UpdateLabel, WriteLabel
from awaitmc.lang import Mode, RmwKind
from awaitmc.memmodel import cons_ramm, cons_sc, get_model

from figures import handover_spin, handover_success
from gen_programs import random_program


def test_handover_success_graph_is_consistent():
    assert cons_ramm(handover_success())
    assert cons_sc(handover_success())


def test_handover_spin_graph_needs_relaxed_signal():
    # With the release/acquire signal the eternal-spin ordering contradicts
    # the synchronization; fully relaxed it is allowed.
    assert not cons_ramm(handover_spin())
    assert cons_ramm(handover_spin(Mode.RLX, Mode.RLX))
    assert not cons_sc(handover_spin(Mode.RLX, Mode.RLX))


def test_coherence_rejects_stale_read_after_own_write():
    g = ExecutionGraph.initial((("x", 0),))
    g = g.add_event((1, 0), WriteLabel("x", Mode.RLX, 2), mo_pos=1)
    g = g.add_event((0, 0), WriteLabel("x", Mode.RLX, 1), mo_pos=2)
    # T0 wrote the mo-later value but reads the mo-earlier one
    g = g.add_event((0, 1), ReadLabel("x", Mode.RLX, 2), rf=(1, 0))
    assert not cons_ramm(g)


def test_placeholder_reads_do_not_constrain_coherence():
    g = ExecutionGraph.initial((("x", 0),))
    g = g.add_event((0, 0), WriteLabel("x", Mode.RLX, 1), mo_pos=1)
    g = g.add_event((0, 1), ReadLabel("x", Mode.RLX, None), rf=None)
    assert cons_ramm(g)
    assert cons_sc(g)


def test_rmw_atomicity():
    g = ExecutionGraph.initial((("x", 0),))
    u = UpdateLabel("x", Mode.RLX, Mode.RLX, RmwKind.FAA, (1,), 0, 1)
    g = g.add_event((0, 0), u, rf=(-1, 0), mo_pos=1)
    assert cons_ramm(g)
    # a plain write squeezing between the rmw and its source breaks atomicity
    bad = g.add_event((1, 0), WriteLabel("x", Mode.RLX, 5), mo_pos=1)
    assert not cons_ramm(bad)
    ok = g.add_event((1, 0), WriteLabel("x", Mode.RLX, 5), mo_pos=2)
    assert cons_ramm(ok)


def test_sc_forbids_store_buffering_outcome():
    # classic store-buffering: both threads write then read the other's
    # location from the initial state
    g = ExecutionGraph.initial((("x", 0), ("y", 0)))
    g = g.add_event((0, 0), WriteLabel("x", Mode.RLX, 1), mo_pos=1)
    g = g.add_event((0, 1), ReadLabel("y", Mode.RLX, 0), rf=(-1, 1))
    g = g.add_event((1, 0), WriteLabel("y", Mode.RLX, 1), mo_pos=1)
    g = g.add_event((1, 1), ReadLabel("x", Mode.RLX, 0), rf=(-1, 0))
    assert cons_ramm(g)
    assert not cons_sc(g)


def test_get_model_names():
    assert get_model("sc").consistent is not None
    with pytest.raises(ValueError):
        get_model("tso")


# -- properties over explored graphs ---------------------------------------


def _complete_graphs(seed, model):
    prog = random_program(random.Random(seed))
    verdict = explore(prog, model, ExploreOptions(collect_complete=True))
    assert verdict.kind == "success"
    return verdict.complete_graphs


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_sc_consistent_implies_ramm_consistent(seed):
    for g in _complete_graphs(seed, "sc"):
        assert cons_sc(g)
        assert cons_ramm(g)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_relaxing_modes_preserves_consistency(seed):
    from dataclasses import replace

    for g in _complete_graphs(seed, "ramm"):
        events = {}
        for eid, label in g.events.items():
            if isinstance(label, (ReadLabel, WriteLabel)):
                label = replace(label, mode=Mode.RLX)
            elif isinstance(label, UpdateLabel):
                label = replace(label, mode=Mode.RLX, fail_mode=Mode.RLX)
            events[eid] = label
        relaxed = ExecutionGraph(events, dict(g.rf), dict(g.mo))
        assert cons_ramm(relaxed)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_causal_prefixes_stay_consistent(seed):
    for g in _complete_graphs(seed, "ramm"):
        events = [e for e, _ in g.program_events()]
        if not events:
            continue
        # drop a po-maximal event nothing else reads from, keeping the
        # causal closure of the rest
        victim = events[-1]
        if victim in set(g.rf.values()):
            continue
        keep = g.porf_prefix([e for e in events if e != victim])
        prefix = g.restricted(keep - {victim})
        assert cons_ramm(prefix)
