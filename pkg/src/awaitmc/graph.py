"""Execution graphs: events, reads-from, modification order, happens-before.

Events are identified by ``(thread, index)`` pairs; initializing writes live
on the pseudo-thread ``INIT_THREAD`` (one event per declared location).
Graphs are value-like: every mutating operation returns a new graph.

Reads-from is total on read events, with ``None`` standing for the explicit
"reads from nowhere yet" placeholder (a read whose source has not been
determined; it constrains nothing and blocks its thread).  Modification
order is kept per location as a tuple of write event ids beginning with the
initializing write.

Atomic read-modify-writes are single events carrying both a read part and an
optional write part; a compare-and-swap whose read value misses the expected
operand has no write part and behaves as a plain read.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterator, Optional, Sequence, Union

from .lang import Mode, RmwKind, is_acquire, is_release

EventId = tuple[int, int]  # (thread, index)
INIT_THREAD = -1


@dataclass(frozen=True)
class InitLabel:
    loc: str
    value: int


@dataclass(frozen=True)
class ReadLabel:
    loc: str
    mode: Mode
    value: Optional[int]  # None iff rf is the placeholder


@dataclass(frozen=True)
class WriteLabel:
    loc: str
    mode: Mode
    value: int


@dataclass(frozen=True)
class UpdateLabel:
    """Single-event rmw: read part always present, write part optional.

    ``operands`` holds the evaluated operand values (one for xchg/faa/or,
    (expected, new) for cas) so the write value can be recomputed when the
    read source changes.  ``write_value`` is None for a failed cas or while
    the read part is unresolved.
    """

    loc: str
    mode: Mode
    fail_mode: Mode
    kind: RmwKind
    operands: tuple[int, ...]
    read_value: Optional[int]
    write_value: Optional[int]

    def effective_mode(self) -> Mode:
        if self.kind is RmwKind.CAS and self.read_value is not None and self.write_value is None:
            return self.fail_mode
        return self.mode


@dataclass(frozen=True)
class FenceLabel:
    mode: Mode


@dataclass(frozen=True)
class ErrorLabel:
    pass


Label = Union[InitLabel, ReadLabel, WriteLabel, UpdateLabel, FenceLabel, ErrorLabel]


def rmw_write_value(kind: RmwKind, operands: tuple[int, ...], read_value: int) -> Optional[int]:
    if kind is RmwKind.XCHG:
        return operands[0]
    if kind is RmwKind.FAA:
        return read_value + operands[0]
    if kind is RmwKind.OR:
        return read_value | operands[0]
    if kind is RmwKind.CAS:
        return operands[1] if read_value == operands[0] else None
    raise AssertionError(kind)


def is_read(label: Label) -> bool:
    return isinstance(label, (ReadLabel, UpdateLabel))


def is_write(label: Label) -> bool:
    if isinstance(label, (InitLabel, WriteLabel)):
        return True
    return isinstance(label, UpdateLabel) and label.write_value is not None


def read_value(label: Label) -> Optional[int]:
    if isinstance(label, ReadLabel):
        return label.value
    if isinstance(label, UpdateLabel):
        return label.read_value
    raise TypeError(f"not a read: {label}")


def written_value(label: Label) -> int:
    if isinstance(label, (InitLabel, WriteLabel)):
        return label.value
    if isinstance(label, UpdateLabel) and label.write_value is not None:
        return label.write_value
    raise TypeError(f"not a write: {label}")


def mem_loc(label: Label) -> Optional[str]:
    return getattr(label, "loc", None)


def label_mode(label: Label) -> Optional[Mode]:
    if isinstance(label, UpdateLabel):
        return label.effective_mode()
    return getattr(label, "mode", None)


def format_label(label: Label, thread_name: str) -> str:
    if isinstance(label, InitLabel):
        return f"W_init({label.loc},{label.value})"
    if isinstance(label, ReadLabel):
        v = "⚡" if label.value is None else str(label.value)
        return f"R^{label.mode}_{thread_name}({label.loc},{v})"
    if isinstance(label, WriteLabel):
        return f"W^{label.mode}_{thread_name}({label.loc},{label.value})"
    if isinstance(label, UpdateLabel):
        rv = "⚡" if label.read_value is None else str(label.read_value)
        if label.write_value is None:
            return f"U^{label.effective_mode()}_{thread_name}({label.loc},r={rv})"
        return f"U^{label.mode}_{thread_name}({label.loc},r={rv},w={label.write_value})"
    if isinstance(label, FenceLabel):
        return f"F^{label.mode}_{thread_name}"
    if isinstance(label, ErrorLabel):
        return f"E_{thread_name}"
    raise TypeError(type(label))


def label_to_obj(label: Label):
    if isinstance(label, InitLabel):
        return {"kind": "init", "loc": label.loc, "value": label.value}
    if isinstance(label, ReadLabel):
        return {"kind": "read", "loc": label.loc, "mode": label.mode.value, "value": label.value}
    if isinstance(label, WriteLabel):
        return {"kind": "write", "loc": label.loc, "mode": label.mode.value, "value": label.value}
    if isinstance(label, UpdateLabel):
        return {
            "kind": "update",
            "loc": label.loc,
            "mode": label.mode.value,
            "fail_mode": label.fail_mode.value,
            "rmw": label.kind.value,
            "operands": list(label.operands),
            "read_value": label.read_value,
            "write_value": label.write_value,
        }
    if isinstance(label, FenceLabel):
        return {"kind": "fence", "mode": label.mode.value}
    if isinstance(label, ErrorLabel):
        return {"kind": "error"}
    raise TypeError(type(label))


def label_from_obj(obj) -> Label:
    kind = obj["kind"]
    if kind == "init":
        return InitLabel(obj["loc"], obj["value"])
    if kind == "read":
        return ReadLabel(obj["loc"], Mode(obj["mode"]), obj["value"])
    if kind == "write":
        return WriteLabel(obj["loc"], Mode(obj["mode"]), obj["value"])
    if kind == "update":
        return UpdateLabel(
            obj["loc"],
            Mode(obj["mode"]),
            Mode(obj["fail_mode"]),
            RmwKind(obj["rmw"]),
            tuple(obj["operands"]),
            obj["read_value"],
            obj["write_value"],
        )
    if kind == "fence":
        return FenceLabel(Mode(obj["mode"]))
    if kind == "error":
        return ErrorLabel()
    raise ValueError(kind)


def graph_to_obj(g: "ExecutionGraph") -> dict:
    return {
        "events": [[e[0], e[1], label_to_obj(g.events[e])] for e in sorted(g.events)],
        "rf": [[list(r), list(w) if w is not None else None] for r, w in sorted(g.rf.items())],
        "mo": {loc: [list(e) for e in order] for loc, order in sorted(g.mo.items())},
    }


def graph_from_obj(obj: dict) -> "ExecutionGraph":
    events = {(t, i): label_from_obj(l) for t, i, l in obj["events"]}
    rf = {tuple(r): (tuple(w) if w is not None else None) for r, w in obj["rf"]}
    mo = {loc: tuple(tuple(e) for e in order) for loc, order in obj["mo"].items()}
    return ExecutionGraph(events, rf, mo)


class ExecutionGraph:
    """Immutable-by-convention execution graph."""

    __slots__ = ("events", "rf", "mo", "_hb", "_key")

    def __init__(
        self,
        events: dict[EventId, Label],
        rf: dict[EventId, Optional[EventId]],
        mo: dict[str, tuple[EventId, ...]],
    ):
        self.events = events
        self.rf = rf
        self.mo = mo
        self._hb: Optional[dict[EventId, frozenset[EventId]]] = None
        self._key = None

    # -- construction -----------------------------------------------------

    @staticmethod
    def initial(shared_init: Sequence[tuple[str, int]]) -> "ExecutionGraph":
        events: dict[EventId, Label] = {}
        mo: dict[str, tuple[EventId, ...]] = {}
        for i, (loc, value) in enumerate(shared_init):
            eid = (INIT_THREAD, i)
            events[eid] = InitLabel(loc, value)
            mo[loc] = (eid,)
        return ExecutionGraph(events, {}, mo)

    def add_event(
        self,
        eid: EventId,
        label: Label,
        rf: Optional[EventId] = None,
        mo_pos: Optional[int] = None,
    ) -> "ExecutionGraph":
        """Append an event at the end of its thread.

        ``rf`` must be given (possibly as the placeholder via value semantics
        of reads with value None) for read events; ``mo_pos`` is the insertion
        index into the location's modification order for write events (must
        be >= 1: nothing precedes the initializing write).
        """
        tid, idx = eid
        assert eid not in self.events
        assert idx == self.thread_len(tid), "events must be appended in program order"
        events = dict(self.events)
        events[eid] = label
        rf_map = dict(self.rf)
        mo = dict(self.mo)
        if is_read(label):
            rf_map[eid] = rf
            if rf is not None:
                assert written_value(self.events[rf]) == read_value(label)
        if is_write(label):
            order = mo[mem_loc(label)]
            assert mo_pos is not None and 1 <= mo_pos <= len(order)
            mo[mem_loc(label)] = order[:mo_pos] + (eid,) + order[mo_pos:]
        return ExecutionGraph(events, rf_map, mo)

    def set_rf(self, rid: EventId, wid: Optional[EventId]) -> "ExecutionGraph":
        """Repoint a read's source, updating the read value (and, for rmws,
        the write value and the write part's modification-order slot)."""
        label = self.events[rid]
        assert is_read(label)
        events = dict(self.events)
        mo = dict(self.mo)
        new_value = None if wid is None else written_value(self.events[wid])
        if isinstance(label, ReadLabel):
            events[rid] = replace(label, value=new_value)
        else:
            wv = None if new_value is None else rmw_write_value(label.kind, label.operands, new_value)
            events[rid] = replace(label, read_value=new_value, write_value=wv)
            order = tuple(e for e in mo[label.loc] if e != rid)
            if wv is not None:
                # keep atomicity by construction: write part right after source
                at = order.index(wid) + 1 if wid is not None else len(order)
                order = order[:at] + (rid,) + order[at:]
            mo[label.loc] = order
        rf_map = dict(self.rf)
        rf_map[rid] = wid
        return ExecutionGraph(events, rf_map, mo)

    def restricted(self, keep: frozenset[EventId]) -> "ExecutionGraph":
        """Sub-graph induced by ``keep`` (init events are always kept).

        Caller must ensure ``keep`` is closed under program-order prefixes
        and contains the sources of all kept reads it wants preserved; rf
        edges to dropped events become placeholders.
        """
        events = {e: l for e, l in self.events.items() if e in keep or e[0] == INIT_THREAD}
        rf = {}
        for r, w in self.rf.items():
            if r in events:
                rf[r] = w if (w is None or w in events) else None
        mo = {loc: tuple(e for e in order if e in events) for loc, order in self.mo.items()}
        g = ExecutionGraph(events, rf, mo)
        # A read whose source was dropped loses its value.
        for r, w in list(rf.items()):
            if w is None and read_value(events[r]) is not None:
                g = g.set_rf(r, None)
        return g

    # -- basic queries -----------------------------------------------------

    def thread_ids(self) -> list[int]:
        return sorted({t for t, _ in self.events if t != INIT_THREAD})

    def thread_len(self, tid: int) -> int:
        return sum(1 for t, _ in self.events if t == tid)

    def thread_events(self, tid: int) -> list[EventId]:
        return [(tid, i) for i in range(self.thread_len(tid))]

    def program_events(self) -> Iterator[tuple[EventId, Label]]:
        for eid in sorted(e for e in self.events if e[0] != INIT_THREAD):
            yield eid, self.events[eid]

    def reads(self) -> list[EventId]:
        return sorted(e for e, l in self.events.items() if is_read(l))

    def placeholder_reads(self) -> list[EventId]:
        return sorted(r for r, w in self.rf.items() if w is None)

    def writes_to(self, loc: str) -> tuple[EventId, ...]:
        return self.mo.get(loc, ())

    def mo_maximal(self, loc: str) -> EventId:
        return self.mo[loc][-1]

    def final_state(self) -> dict[str, int]:
        """Value of each location at the modification-order maximum."""
        return {loc: written_value(self.events[order[-1]]) for loc, order in self.mo.items()}

    def po_prefix(self, eid: EventId) -> list[EventId]:
        """Events strictly program-order before ``eid`` (same thread)."""
        tid, idx = eid
        return [(tid, i) for i in range(idx)]

    def porf_prefix(self, roots: Sequence[EventId]) -> frozenset[EventId]:
        """Closure of ``roots`` under po-predecessors and rf sources."""
        keep: set[EventId] = set()
        stack = [e for e in roots if e[0] != INIT_THREAD]
        while stack:
            e = stack.pop()
            if e in keep:
                continue
            keep.add(e)
            for p in self.po_prefix(e):
                if p not in keep:
                    stack.append(p)
            w = self.rf.get(e)
            if w is not None and w[0] != INIT_THREAD and w not in keep:
                stack.append(w)
        return frozenset(keep)

    # -- happens-before ----------------------------------------------------

    def _sw_edges(self) -> list[tuple[EventId, EventId]]:
        """Synchronizes-with: rf edges whose write side is a release (or has
        a release/sc fence program-order before it) and whose read side is an
        acquire (or has an acquire/sc fence program-order after it)."""
        out = []
        for r, w in self.rf.items():
            if w is None or w[0] == INIT_THREAD:
                continue
            wl = self.events[w]
            if not is_write(wl):
                continue
            wmode = label_mode(wl)
            rel = is_release(wmode) or any(
                isinstance(self.events[p], FenceLabel)
                and self.events[p].mode in (Mode.REL, Mode.SC)
                for p in self.po_prefix(w)
            )
            if not rel:
                continue
            rl = self.events[r]
            rmode = label_mode(rl)
            tid, idx = r
            acq = is_acquire(rmode) or any(
                isinstance(self.events[(tid, i)], FenceLabel)
                and self.events[(tid, i)].mode in (Mode.ACQ, Mode.SC)
                for i in range(idx + 1, self.thread_len(tid))
            )
            if acq:
                out.append((w, r))
        return out

    def hb(self) -> dict[EventId, frozenset[EventId]]:
        """Reachability map of strict happens-before: hb()[e] = events after e.

        Initializing writes happen before every program event.
        """
        if self._hb is not None:
            return self._hb
        succ: dict[EventId, list[EventId]] = {e: [] for e in self.events}
        for tid in self.thread_ids():
            evs = self.thread_events(tid)
            for a, b in zip(evs, evs[1:]):
                succ[a].append(b)
        for w, r in self._sw_edges():
            succ[w].append(r)
        reach: dict[EventId, frozenset[EventId]] = {}

        order = self._topo_or_none(succ)
        if order is None:
            # po ∪ sw is cyclic only if sw goes backwards; fall back to DFS.
            for e in self.events:
                seen: set[EventId] = set()
                stack = list(succ[e])
                while stack:
                    x = stack.pop()
                    if x in seen:
                        continue
                    seen.add(x)
                    stack.extend(succ[x])
                reach[e] = frozenset(seen)
        else:
            for e in reversed(order):
                acc: set[EventId] = set()
                for s in succ[e]:
                    acc.add(s)
                    acc |= reach[s]
                reach[e] = frozenset(acc)
        prog = frozenset(e for e in self.events if e[0] != INIT_THREAD)
        for e in self.events:
            if e[0] == INIT_THREAD:
                reach[e] = reach[e] | (prog - {e})
        self._hb = reach
        return reach

    def _topo_or_none(self, succ: dict[EventId, list[EventId]]) -> Optional[list[EventId]]:
        indeg = {e: 0 for e in succ}
        for e, ss in succ.items():
            for s in ss:
                indeg[s] += 1
        queue = sorted(e for e, d in indeg.items() if d == 0)
        out = []
        while queue:
            e = queue.pop()
            out.append(e)
            for s in succ[e]:
                indeg[s] -= 1
                if indeg[s] == 0:
                    queue.append(s)
        return out if len(out) == len(succ) else None

    def happens_before(self, a: EventId, b: EventId) -> bool:
        return b in self.hb()[a]

    # -- identity ----------------------------------------------------------

    def canonical_key(self):
        if self._key is None:
            self._key = (
                tuple(sorted((e, self.events[e]) for e in self.events)),
                tuple(sorted(self.rf.items(), key=lambda kv: kv[0])),
                tuple(sorted((loc, order) for loc, order in self.mo.items())),
            )
        return self._key

    def __eq__(self, other):
        return isinstance(other, ExecutionGraph) and self.canonical_key() == other.canonical_key()

    def __hash__(self):
        return hash(self.canonical_key())

    # -- rendering ---------------------------------------------------------

    def _thread_name(self, tid: int, thread_names: Optional[Sequence[str]] = None) -> str:
        if tid == INIT_THREAD:
            return "init"
        if thread_names is not None and 0 <= tid < len(thread_names):
            return thread_names[tid]
        return f"T{tid}"

    def dump_text(self, thread_names: Optional[Sequence[str]] = None) -> str:
        """Stable text rendering: events per thread, then rf and mo edges."""
        lines = []
        for eid in sorted(e for e in self.events if e[0] == INIT_THREAD):
            lines.append(f"  {eid[0]}/{eid[1]}: {format_label(self.events[eid], 'init')}")
        for tid in self.thread_ids():
            name = self._thread_name(tid, thread_names)
            for eid in self.thread_events(tid):
                lines.append(f"  {eid[0]}/{eid[1]}: {format_label(self.events[eid], name)}")
        for r in sorted(self.rf):
            w = self.rf[r]
            src = f"{w[0]}/{w[1]}" if w is not None else "⚡"
            lines.append(f"  rf {r[0]}/{r[1]} <- {src}")
        for loc in sorted(self.mo):
            order = " -> ".join(f"{e[0]}/{e[1]}" for e in self.mo[loc])
            lines.append(f"  mo[{loc}]: {order}")
        return "\n".join(lines) + "\n"

    def dump_dot(self, thread_names: Optional[Sequence[str]] = None) -> str:
        """GraphViz rendering with po, rf and mo edge families."""
        def node(e: EventId) -> str:
            return f"e_{e[0]}_{e[1]}".replace("-", "m")

        lines = ["digraph G {", "  rankdir=TB;", "  node [shape=box, fontname=monospace];"]
        for eid in sorted(self.events):
            name = self._thread_name(eid[0], thread_names)
            label = format_label(self.events[eid], name).replace('"', '\\"')
            lines.append(f'  {node(eid)} [label="{label}"];')
        for tid in self.thread_ids():
            evs = self.thread_events(tid)
            for a, b in zip(evs, evs[1:]):
                lines.append(f"  {node(a)} -> {node(b)} [label=po, color=black];")
        for r in sorted(self.rf):
            w = self.rf[r]
            if w is not None:
                lines.append(f"  {node(w)} -> {node(r)} [label=rf, color=forestgreen];")
        for loc in sorted(self.mo):
            order = self.mo[loc]
            for a, b in zip(order, order[1:]):
                lines.append(f"  {node(a)} -> {node(b)} [label=mo, color=orange, style=dashed];")
        lines.append("}")
        return "\n".join(lines) + "\n"
