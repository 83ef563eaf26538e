"""NOR-only feedback netlists with a fan-in limit, and dual-NOR package counts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .boolmin import Gate, NorForm, Sop, to_nor_form

MAX_FANIN = 4
GATES_PER_PACKAGE = 2  # MMC4002: two 4-input NORs


@dataclass(frozen=True)
class Netlist:
    """NOR gate graph.

    Each state bit ``y`` is driven through ``feedback``: the gate output
    ``y_next`` is wired back to the present-state net ``y`` with no delay of
    its own.  Cutting those wires leaves an acyclic network, and ``gates`` is
    kept in a topological order of that network.
    """

    inputs: tuple[str, ...]
    state_bits: tuple[str, ...]
    gates: tuple[Gate, ...]
    feedback: Mapping[str, str]
    outputs: Mapping[str, str]
    constants: Mapping[str, int] = field(default_factory=dict)
    # gate output -> function that owns it ("shared" for common inverters)
    owner: Mapping[str, str] = field(default_factory=dict)

    @property
    def sources(self) -> tuple[str, ...]:
        return self.inputs + self.state_bits + tuple(self.constants)

    def driver(self) -> dict[str, Gate]:
        return {g.output: g for g in self.gates}

    def evaluate_open(self, assignment: Mapping[str, int]) -> dict[str, int]:
        """Values of every net with the feedback wires cut.

        ``assignment`` gives the inputs and present-state bits; the returned
        map holds next-state values under the ``*_next`` nets.
        """
        values = dict(self.constants)
        for n in self.inputs + self.state_bits:
            values[n] = assignment[n]
        for g in self.gates:
            values[g.output] = int(not any(values[i] for i in g.inputs))
        return values

    def dump(self) -> str:
        lines = [str(g) for g in self.gates]
        lines += [f"FEEDBACK {nxt} -> {bit}" for nxt, bit in self.feedback.items()]
        lines += [f"OUTPUT {name} = {net}" for name, net in self.outputs.items()]
        lines += [f"CONST {net} = {v}" for net, v in self.constants.items()]
        return "\n".join(lines) + "\n"


def check_netlist(n: Netlist) -> list[str]:
    """Structural invariant violations, empty when the netlist is well formed."""
    problems = []
    drivers: dict[str, int] = {}
    for g in n.gates:
        drivers[g.output] = drivers.get(g.output, 0) + 1
        if not 1 <= len(g.inputs) <= MAX_FANIN:
            problems.append(f"gate {g.output} has fan-in {len(g.inputs)}")
    for s in n.sources:
        drivers[s] = drivers.get(s, 0) + 1
    for net, count in drivers.items():
        if count > 1:
            problems.append(f"net {net} has {count} drivers")
    known = set(drivers)
    for g in n.gates:
        for i in g.inputs:
            if i not in known:
                problems.append(f"gate {g.output} reads undriven net {i}")
    if sorted(n.feedback.values()) != sorted(n.state_bits):
        problems.append("feedback map does not cover the state bits one-to-one")
    for nxt in n.feedback:
        if nxt not in known:
            problems.append(f"feedback source {nxt} is not driven")
    ready = set(n.sources)
    for g in n.gates:
        if not all(i in ready for i in g.inputs):
            problems.append(f"gate {g.output} closes a loop outside the feedback map")
        ready.add(g.output)
    return problems


def _nor(out: str, inputs: Sequence[str], sink: list[Gate]) -> None:
    """Emit NOR(inputs) onto ``out``, splitting into a balanced tree above the fan-in limit."""
    inputs = list(inputs)
    if len(inputs) <= MAX_FANIN:
        sink.append(Gate(out, tuple(inputs)))
        return
    groups: list[list[str]] = [[] for _ in range(MAX_FANIN)]
    for i, net in enumerate(inputs):
        groups[i * MAX_FANIN // len(inputs)].append(net)
    top = []
    for j, grp in enumerate(groups):
        if len(grp) == 1:
            top.append(grp[0])
            continue
        # OR(grp) = INV(NOR(grp))
        _nor(f"{out}_t{j}", grp, sink)
        sink.append(Gate(f"{out}_o{j}", (f"{out}_t{j}",)))
        top.append(f"{out}_o{j}")
    sink.append(Gate(out, tuple(top)))


def map_to_netlist(
    next_state: Mapping[str, NorForm | Sop],
    outputs: Mapping[str, NorForm | Sop],
    inputs: Sequence[str],
) -> Netlist:
    """Instantiate NOR forms as one netlist, closing each state bit's feedback loop.

    ``next_state`` maps state bit names to their excitation functions.  A
    constant function ties its net to a constant instead of using gates.
    """
    inputs = tuple(inputs)
    state_bits = tuple(next_state)
    signals = set(inputs) | set(state_bits)

    inverters: dict[str, Gate] = {}
    body: list[Gate] = []
    owner: dict[str, str] = {}
    constants: dict[str, int] = {}
    feedback: dict[str, str] = {}
    out_map: dict[str, str] = {}

    def local(form: NorForm, fn: str, final: str) -> dict[str, str]:
        names = {}
        for n in form.names:
            names[n] = n
        for g in form.gates:
            if g.output.startswith("~"):
                names[g.output] = f"{g.output[1:]}_n"
            elif g.output == form.output:
                names[g.output] = final
            else:
                names[g.output] = f"{fn}_{g.output}"
        return names

    def place(fn: str, f: NorForm | Sop, final: str, must_drive: bool) -> str:
        if isinstance(f, Sop):
            if f.is_constant:
                constants[final] = 0 if not f.cubes else 1
                return final
            f = to_nor_form(f)
        unknown = [n for n in f.names if n not in signals and any(n in g.inputs for g in f.gates)]
        if f.output in f.names and f.output not in signals:
            unknown.append(f.output)
        if unknown:
            raise ValueError(f"function {fn} uses unknown signals {sorted(set(unknown))}")
        rename = local(f, fn, final)
        for g in f.gates:
            if g.output.startswith("~"):
                net = rename[g.output]
                inverters.setdefault(net, Gate(net, g.inputs))
                owner.setdefault(net, "shared")
        start = len(body)
        for g in f.gates:
            if not g.output.startswith("~"):
                _nor(rename[g.output], [rename[i] for i in g.inputs], body)
        for g in body[start:]:
            owner[g.output] = fn
        out = rename[f.output]
        if out != final and must_drive:
            # a wire or shared inverter cannot be a distinct next-state net
            if f.output.startswith("~"):
                body.append(Gate(final, (f.output[1:],)))
            else:
                body.append(Gate(f"{fn}_buf", (out,)))
                body.append(Gate(final, (f"{fn}_buf",)))
            for g in body[-2:]:
                owner.setdefault(g.output, fn)
            out = final
        return out

    for bit, f in next_state.items():
        nxt = f"{bit}_next"
        place(bit, f, nxt, must_drive=True)
        feedback[nxt] = bit
    for name, f in outputs.items():
        out_map[name] = place(name, f, name, must_drive=False)

    order = [n for n in inputs + state_bits if f"{n}_n" in inverters]
    gates = tuple(inverters[f"{n}_n"] for n in order) + tuple(body)
    used = {i for g in gates for i in g.inputs} | set(out_map.values()) | set(feedback)
    gates = tuple(g for g in gates if g.output in used or owner.get(g.output) != "shared")
    return Netlist(inputs, state_bits, gates, feedback, out_map, constants, owner)


@dataclass(frozen=True)
class PackageReport:
    gates: int
    packages: int
    breakdown: Mapping[str, int]

    def __str__(self) -> str:
        parts = ", ".join(f"{k}={v}" for k, v in self.breakdown.items())
        return f"{self.gates} NOR gates in {self.packages} dual-NOR packages ({parts})"


def package_count(n: Netlist) -> PackageReport:
    breakdown: dict[str, int] = {}
    for g in n.gates:
        fn = n.owner.get(g.output, "other")
        breakdown[fn] = breakdown.get(fn, 0) + 1
    count = len(n.gates)
    return PackageReport(count, math.ceil(count / GATES_PER_PACKAGE), dict(sorted(breakdown.items())))
