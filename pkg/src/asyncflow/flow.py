"""Symbolic flow tables, state encodings and race analysis.

A flow table lists, for every internal state and every input vector, the next
state the machine moves to (or ``None`` when the entry is a don't-care).
Outputs are Moore outputs attached to each state.
"""

from __future__ import annotations

import enum
import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Sequence

Bits = tuple[int, ...]


@dataclass(frozen=True)
class Diagnostic:
    kind: str
    message: str
    time: int | None = None
    net: str | None = None

    def __str__(self) -> str:
        where = f" @{self.time}" if self.time is not None else ""
        return f"{self.kind}{where}: {self.message}"


def input_vectors(k: int) -> list[Bits]:
    """All input vectors of arity ``k`` in binary counting order."""
    return list(itertools.product((0, 1), repeat=k))


def bits_str(bits: Sequence[int | None]) -> str:
    return "".join("-" if b is None else str(b) for b in bits)


def hamming(a: Bits, b: Bits) -> int:
    return sum(x != y for x, y in zip(a, b))


@dataclass(frozen=True)
class StateRow:
    name: str
    outputs: Mapping[str, int | None]
    next: Mapping[Bits, str | None]


@dataclass(frozen=True)
class FlowTable:
    input_vars: tuple[str, ...]
    output_vars: tuple[str, ...]
    states: tuple[StateRow, ...]

    def __post_init__(self):
        object.__setattr__(self, "input_vars", tuple(self.input_vars))
        object.__setattr__(self, "output_vars", tuple(self.output_vars))
        object.__setattr__(self, "states", tuple(self.states))

    @property
    def state_names(self) -> list[str]:
        return [row.name for row in self.states]

    def row(self, name: str) -> StateRow:
        for r in self.states:
            if r.name == name:
                return r
        raise KeyError(f"unknown state {name!r}")

    def next_state(self, state: str, v: Sequence[int]) -> str | None:
        return self.row(state).next.get(tuple(v))


@dataclass(frozen=True)
class StateEncoding:
    """Bit codes per state; ``bits`` names the state variables MSB first."""

    bits: tuple[str, ...]
    codes: Mapping[str, Bits]

    def __post_init__(self):
        object.__setattr__(self, "bits", tuple(self.bits))
        codes = {name: tuple(code) for name, code in self.codes.items()}
        object.__setattr__(self, "codes", codes)
        m = len(self.bits)
        for name, code in codes.items():
            if len(code) != m or any(b not in (0, 1) for b in code):
                raise ValueError(f"code for state {name!r} is not a {m}-bit vector: {code}")
        if len(set(codes.values())) != len(codes):
            raise ValueError("state encoding is not injective")
        if codes and m < math.ceil(math.log2(len(codes))):
            raise ValueError(f"{m} state bits cannot encode {len(codes)} states")

    @property
    def width(self) -> int:
        return len(self.bits)

    @classmethod
    def from_strings(cls, bits: Sequence[str], codes: Mapping[str, str]) -> "StateEncoding":
        return cls(tuple(bits), {s: tuple(int(c) for c in code) for s, code in codes.items()})

    def name_of(self, code: Bits) -> str | None:
        for name, c in self.codes.items():
            if c == code:
                return name
        return None


def default_encoding(ft: FlowTable, bits: Sequence[str] | None = None) -> StateEncoding:
    """State names that are equal-width bit strings encode themselves; anything else counts up in binary."""
    names = ft.state_names
    if names and all(set(n) <= {"0", "1"} for n in names) and len({len(n) for n in names}) == 1:
        m = len(names[0])
        codes = {n: tuple(int(c) for c in n) for n in names}
    else:
        m = max(1, math.ceil(math.log2(max(len(names), 1))))
        codes = {n: tuple(int(c) for c in format(i, f"0{m}b")) for i, n in enumerate(names)}
    if bits is None:
        bits = tuple(f"y{i}" for i in reversed(range(m)))
    return StateEncoding(tuple(bits), codes)


def validate_flow_table(ft: FlowTable) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    names = ft.state_names
    seen: set[str] = set()
    for n in names:
        if n in seen:
            diags.append(Diagnostic("duplicate-state", f"state {n!r} defined more than once"))
        seen.add(n)

    vectors = input_vectors(len(ft.input_vars))
    for row in ft.states:
        for v in vectors:
            if v not in row.next:
                diags.append(Diagnostic("missing-input", f"state {row.name!r} has no entry for input {bits_str(v)}"))
        for v, target in row.next.items():
            if len(v) != len(ft.input_vars):
                diags.append(Diagnostic("bad-arity", f"state {row.name!r}: input vector {bits_str(v)} has wrong arity"))
            elif target is not None and target not in seen:
                diags.append(Diagnostic("dangling-target", f"state {row.name!r} input {bits_str(v)} goes to unknown state {target!r}"))
        if set(row.outputs) != set(ft.output_vars):
            diags.append(Diagnostic("output-mismatch", f"state {row.name!r} defines outputs {sorted(row.outputs)}"))

    if names:
        reached = {names[0]}
        queue = deque([names[0]])
        while queue:
            row = ft.row(queue.popleft())
            for target in row.next.values():
                if target is not None and target in seen and target not in reached:
                    reached.add(target)
                    queue.append(target)
        for n in names:
            if n not in reached:
                diags.append(Diagnostic("unreachable-state", f"state {n!r} is not reachable from {names[0]!r}"))
    return diags


@dataclass(frozen=True)
class Stable:
    state: str


@dataclass(frozen=True)
class Cycle:
    states: tuple[str, ...]


@dataclass(frozen=True)
class Undefined:
    state: str


SettleResult = Stable | Cycle | Undefined


def settle(ft: FlowTable, start: str, v: Sequence[int]) -> SettleResult:
    """Chase next-state entries from ``start`` while the input ``v`` is held."""
    v = tuple(v)
    if len(v) != len(ft.input_vars):
        raise ValueError(f"input vector {v} does not match inputs {ft.input_vars}")
    ft.row(start)
    path = [start]
    state = start
    for _ in range(len(ft.states) + 1):
        nxt = ft.next_state(state, v)
        if nxt is None:
            return Undefined(state)
        if nxt == state:
            return Stable(state)
        if nxt in path:
            return Cycle(tuple(path[path.index(nxt):]))
        ft.row(nxt)
        path.append(nxt)
        state = nxt
    raise AssertionError("settle exceeded its step bound")  # pragma: no cover


@dataclass(frozen=True)
class ExcitationTable:
    inputs: tuple[str, ...]
    state_bits: tuple[str, ...]
    output_vars: tuple[str, ...]
    entries: Mapping[tuple[Bits, Bits], Bits | None]
    outputs: Mapping[Bits, tuple[int | None, ...]]
    state_names: Mapping[Bits, str]

    @property
    def m(self) -> int:
        return len(self.state_bits)

    @property
    def k(self) -> int:
        return len(self.inputs)

    def codes(self) -> list[Bits]:
        return input_vectors(self.m)


def encode(ft: FlowTable, enc: StateEncoding) -> ExcitationTable:
    missing = [n for n in ft.state_names if n not in enc.codes]
    if missing:
        raise ValueError(f"encoding has no code for states {missing}")
    m, k = enc.width, len(ft.input_vars)
    entries: dict[tuple[Bits, Bits], Bits | None] = {}
    outputs: dict[Bits, tuple[int | None, ...]] = {}
    for code in input_vectors(m):
        outputs[code] = (None,) * len(ft.output_vars)
        for v in input_vectors(k):
            entries[code, v] = None
    for row in ft.states:
        code = enc.codes[row.name]
        outputs[code] = tuple(row.outputs.get(o) for o in ft.output_vars)
        for v in input_vectors(k):
            target = row.next.get(v)
            entries[code, v] = None if target is None else enc.codes[target]
    names = {enc.codes[n]: n for n in ft.state_names}
    return ExcitationTable(ft.input_vars, enc.bits, ft.output_vars, entries, outputs, names)


class RaceKind(enum.Enum):
    ADJACENT = "adjacent"
    NONCRITICAL = "noncritical-race"
    CRITICAL = "critical-race"
    UNDEFINED = "undefined-race"


@dataclass(frozen=True)
class RaceDiagnostic:
    source: str
    inputs: Bits
    target: str
    distance: int
    kind: RaceKind
    # order of bit flips leading to ``outcome`` (the divergent end state for bad races)
    witness: tuple[str, ...] = ()
    outcome: Bits | None = None
    may_cycle: bool = False

    def __str__(self) -> str:
        s = f"{self.source} -> {self.target} on {bits_str(self.inputs)}: {self.kind.value} (distance {self.distance})"
        if self.outcome is not None:
            s += f", order {'/'.join(self.witness)} ends in {bits_str(self.outcome)}"
        if self.may_cycle:
            s += ", may cycle"
        return s


def _excite(next_state: Mapping[str, object], exc: ExcitationTable, code: Bits, v: Bits) -> Bits:
    assignment = dict(zip(exc.inputs, v))
    assignment.update(zip(exc.state_bits, code))
    return tuple(next_state[b].evaluate(assignment) for b in exc.state_bits)


def check_races(exc: ExcitationTable, next_state: Mapping[str, object]) -> list[RaceDiagnostic]:
    """Classify every defined state change of ``exc``.

    ``next_state`` maps each state bit to its synthesized excitation function
    (anything with an ``evaluate(assignment)`` method).  Multi-bit changes are
    explored under every order of single-bit flips of the excited bits, so
    don't-care cells behave exactly as the synthesized logic resolves them.
    """
    diags: list[RaceDiagnostic] = []
    for (code, v), target in exc.entries.items():
        if target is None or target == code:
            continue
        src_name, dst_name = exc.state_names[code], exc.state_names[target]
        d = hamming(code, target)
        if d <= 1:
            diags.append(RaceDiagnostic(src_name, v, dst_name, d, RaceKind.ADJACENT))
            continue

        # BFS over partially-switched codes; remember how each was reached
        parent: dict[Bits, tuple[Bits, str] | None] = {code: None}
        queue = deque([code])
        stable: list[Bits] = []
        edges: dict[Bits, list[Bits]] = {}
        while queue:
            x = queue.popleft()
            y = _excite(next_state, exc, x, v)
            excited = [i for i in range(exc.m) if y[i] != x[i]]
            if not excited:
                stable.append(x)
                continue
            succ = []
            for i in excited:
                z = x[:i] + (1 - x[i],) + x[i + 1:]
                succ.append(z)
                if z not in parent:
                    parent[z] = (x, exc.state_bits[i])
                    queue.append(z)
            edges[x] = succ
        may_cycle = _has_cycle(edges)

        def order_to(z: Bits) -> tuple[str, ...]:
            out = []
            while parent[z] is not None:
                z, bit = parent[z]
                out.append(bit)
            return tuple(reversed(out))

        divergent = sorted(s for s in stable if s != target)
        if not divergent and target in stable:
            diags.append(RaceDiagnostic(src_name, v, dst_name, d, RaceKind.NONCRITICAL, may_cycle=may_cycle))
            continue
        legit = [s for s in divergent if s in exc.state_names]
        if legit:
            kind, outcome = RaceKind.CRITICAL, legit[0]
        elif divergent:
            kind, outcome = RaceKind.UNDEFINED, divergent[0]
        else:
            # no stable code reachable at all: a livelock
            kind, outcome = RaceKind.UNDEFINED, None
        witness = order_to(outcome) if outcome is not None else ()
        diags.append(RaceDiagnostic(src_name, v, dst_name, d, kind, witness, outcome, may_cycle))
    return diags


def _has_cycle(edges: Mapping[Bits, list[Bits]]) -> bool:
    state: dict[Bits, int] = {}

    def visit(x: Bits) -> bool:
        state[x] = 1
        for z in edges.get(x, ()):
            if state.get(z) == 1 or (z not in state and visit(z)):
                return True
        state[x] = 2
        return False

    return any(x not in state and visit(x) for x in edges)
