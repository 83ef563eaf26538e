"""Event-driven two-valued simulation of NOR netlists with transport gate delays.

Time is counted in integer time units (tu).  Every gate evaluation schedules
its result ``delay`` tu later and nothing is filtered, so pulses narrower than
a gate delay survive into the trace.  Events are processed in ``(time, net)``
order; when a gate is evaluated twice for the same instant the later result
wins.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, NamedTuple, Sequence

from .flow import Diagnostic
from .gatemap import Netlist

RELAX_LIMIT = 1000
DEFAULT_OSC_THRESHOLD = 20


@dataclass(frozen=True)
class SignalWave:
    initial: int
    changes: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "changes", tuple((int(t), int(v)) for t, v in self.changes))
        times = [t for t, _ in self.changes]
        if any(t < 0 for t in times) or any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError(f"event times must be non-negative and strictly increasing: {times}")


@dataclass(frozen=True)
class Stimulus:
    waves: Mapping[str, SignalWave]
    t_end: int

    def __post_init__(self):
        for name, w in self.waves.items():
            late = [t for t, _ in w.changes if t >= self.t_end]
            if late:
                raise ValueError(f"{name}: events at {late} are not before t_end={self.t_end}")

    def events(self) -> list[tuple[int, str, int]]:
        return sorted((t, name, v) for name, w in self.waves.items() for t, v in w.changes)


def make_clock(period: int, duty_high: Fraction | float = Fraction(1, 2), t_end: int = 0) -> SignalWave:
    """Square wave that starts low at t=0.

    Each period is low for ``period * (1 - duty_high)`` tu and then high, so
    with a 1/2 duty cycle the first rising edge falls at ``period / 2``.
    """
    if period < 2:
        raise ValueError(f"clock period must be at least 2 tu, got {period}")
    high = Fraction(duty_high) * period
    if high.denominator != 1 or not 0 < high < period:
        raise ValueError(f"duty {duty_high} of period {period} does not give a whole high time")
    high = int(high)
    low = period - high
    changes = []
    t = 0
    while True:
        if t + low >= t_end:
            break
        changes.append((t + low, 1))
        if t + period >= t_end:
            break
        changes.append((t + period, 0))
        t += period
    return SignalWave(0, tuple(changes))


def pulse(at: int, width: int, initial: int = 0) -> SignalWave:
    return SignalWave(initial, ((at, 1 - initial), (at + width, initial)))


@dataclass(frozen=True)
class DelayModel:
    default: int = 1
    overrides: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.default < 1 or any(d < 1 for d in self.overrides.values()):
            raise ValueError("gate delays must be at least 1 tu")

    def of(self, gate_output: str) -> int:
        return self.overrides.get(gate_output, self.default)


class Step(NamedTuple):
    time: int
    settled: bool


@dataclass(frozen=True)
class Trace:
    initial: Mapping[str, int]
    changes: Mapping[str, tuple[tuple[int, int], ...]]
    t_end: int
    inputs: tuple[str, ...]
    state_bits: tuple[str, ...]
    outputs: Mapping[str, str]
    steps: tuple[Step, ...] = ()
    diagnostics: tuple[Diagnostic, ...] = ()

    def net(self, signal: str) -> str:
        if signal in self.outputs:
            return self.outputs[signal]
        if signal in self.initial:
            return signal
        raise KeyError(f"unknown signal {signal!r}")

    def history(self, signal: str) -> tuple[tuple[int, int], ...]:
        return self.changes[self.net(signal)]

    def value_at(self, signal: str, t: int) -> int:
        net = self.net(signal)
        v = self.initial[net]
        for when, new in self.changes[net]:
            if when > t:
                break
            v = new
        return v

    def state_code(self, t: int) -> tuple[int, ...]:
        return tuple(self.value_at(b, t) for b in self.state_bits)


def simulate(
    n: Netlist,
    s: Stimulus,
    d: DelayModel | None = None,
    init: Mapping[str, int] | None = None,
) -> Trace:
    d = d or DelayModel()
    init = dict(init) if init is not None else {b: 0 for b in n.state_bits}
    if set(s.waves) != set(n.inputs):
        raise ValueError(f"stimulus drives {sorted(s.waves)} but the netlist inputs are {sorted(n.inputs)}")
    missing = [b for b in n.state_bits if b not in init]
    if missing:
        raise ValueError(f"no initial value for state bits {missing}")

    fanout: dict[str, list[int]] = {}
    for gi, g in enumerate(n.gates):
        for i in g.inputs:
            fanout.setdefault(i, []).append(gi)

    values: dict[str, int] = dict(n.constants)
    for name in n.inputs:
        values[name] = s.waves[name].initial
    for b in n.state_bits:
        values[b] = init[b]
    for g in n.gates:
        values.setdefault(g.output, 0)

    def nor(g) -> int:
        return int(not any(values[i] for i in g.inputs))

    diags: list[Diagnostic] = []
    evaluations = 0
    quiet = False
    while evaluations < RELAX_LIMIT:
        changed = False
        for g in n.gates:
            evaluations += 1
            v = nor(g)
            if values[g.output] != v:
                values[g.output] = v
                changed = True
        for nxt, bit in n.feedback.items():
            if values[bit] != values[nxt]:
                values[bit] = values[nxt]
                changed = True
        if not changed:
            quiet = True
            break

    initial = dict(values)
    changes: dict[str, list[tuple[int, int]]] = {net: [] for net in values}
    pending: dict[tuple[int, str], int] = {}
    queue: list[tuple[int, str]] = []

    def schedule(t: int, net: str, v: int) -> None:
        if (t, net) not in pending:
            heapq.heappush(queue, (t, net))
        pending[t, net] = v

    if not quiet:
        diags.append(Diagnostic("relaxation", f"circuit not quiescent after {RELAX_LIMIT} evaluations before t=0"))
        for g in n.gates:
            if values[g.output] != nor(g):
                schedule(d.of(g.output), g.output, nor(g))

    input_times = sorted({t for t, _, _ in s.events()})
    for t, name, v in s.events():
        schedule(t, name, v)
    inputs = set(n.inputs)

    steps: list[Step] = []
    boundary = 0  # index into input_times of the next step start

    def unsettled() -> bool:
        return any(net not in inputs and values[net] != v for (_, net), v in pending.items())

    def apply(t: int, net: str, v: int) -> None:
        values[net] = v
        changes[net].append((t, v))
        touched = [net]
        if net in n.feedback:
            bit = n.feedback[net]
            if values[bit] != v:
                values[bit] = v
                changes[bit].append((t, v))
                touched.append(bit)
        for src in touched:
            for gi in fanout.get(src, ()):
                g = n.gates[gi]
                schedule(t + d.of(g.output), g.output, nor(g))

    while queue and queue[0][0] <= s.t_end:
        t, net = queue[0]
        while boundary < len(input_times) and t >= input_times[boundary]:
            if boundary:
                steps.append(Step(input_times[boundary - 1], not unsettled()))
            boundary += 1
        heapq.heappop(queue)
        v = pending.pop((t, net))
        if values[net] != v:
            apply(t, net, v)
    if input_times:
        steps.append(Step(input_times[-1], not unsettled()))

    return Trace(
        initial=initial,
        changes={k: tuple(v) for k, v in changes.items()},
        t_end=s.t_end,
        inputs=n.inputs,
        state_bits=n.state_bits,
        outputs=dict(n.outputs),
        steps=tuple(steps),
        diagnostics=tuple(diags),
    )


class Pulse(NamedTuple):
    start: int
    width: int | None  # None: still high at the end of the trace


def measure_pulses(t: Trace, signal: str) -> list[Pulse]:
    net = t.net(signal)
    pulses = []
    start = 0 if t.initial[net] else None
    for when, v in t.changes[net]:
        if v and start is None:
            start = when
        elif not v and start is not None:
            pulses.append(Pulse(start, when - start))
            start = None
    if start is not None:
        pulses.append(Pulse(start, None))
    return pulses


def detect_oscillation(t: Trace, threshold: int = DEFAULT_OSC_THRESHOLD) -> list[Diagnostic]:
    """Flag nets that change more than ``threshold`` times between consecutive input events."""
    bounds = sorted({when for name in t.inputs for when, _ in t.changes[name]})
    edges = [0] + bounds + [t.t_end + 1]
    diags = []
    inputs = set(t.inputs)
    for net in sorted(t.changes):
        if net in inputs:
            continue
        times = [when for when, _ in t.changes[net]]
        for lo, hi in zip(edges, edges[1:]):
            count = sum(lo <= w < hi for w in times)
            if count > threshold:
                diags.append(Diagnostic("oscillation", f"{net} changed {count} times in [{lo}, {hi})", lo, net))
    return diags


def check_fundamental_mode(t: Trace, s: Stimulus, settle_window: int) -> list[Diagnostic]:
    """Warn about input changes that arrive together or while the state is still moving."""
    warnings = []
    by_time: dict[int, list[str]] = {}
    for when, name, _ in s.events():
        by_time.setdefault(when, []).append(name)
    state_times = sorted(when for b in t.state_bits for when, _ in t.changes[b])
    for when, names in sorted(by_time.items()):
        if len(names) > 1:
            warnings.append(Diagnostic("simultaneous-inputs", f"{', '.join(names)} change together", when))
        recent = [c for c in state_times if 0 <= when - c < settle_window]
        if recent:
            warnings.append(Diagnostic(
                "not-settled",
                f"{', '.join(names)} changes {when - recent[-1]} tu after a state change (window {settle_window})",
                when,
            ))
    return warnings
