"""The three machines of the output-width study and the end-to-end check of its claims.

``section1`` is the plain machine whose Z pulse lasts only as long as a
transient state; ``section2`` is the six-state machine that holds Z for one
high phase of an external clock CK; ``reduced`` is a four-state version of
the clocked machine.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .boolmin import Equations, derive_equations, to_nor_form
from .eventsim import (
    DelayModel,
    Pulse,
    SignalWave,
    Stimulus,
    Trace,
    check_fundamental_mode,
    detect_oscillation,
    make_clock,
    measure_pulses,
    pulse,
    simulate,
)
from .flow import (
    Diagnostic,
    ExcitationTable,
    FlowTable,
    RaceDiagnostic,
    RaceKind,
    StateEncoding,
    StateRow,
    check_races,
    encode,
)
from .gatemap import Netlist, PackageReport, map_to_netlist, package_count

CLOCK_NAMES = ("CK", "ck", "CLK", "clk")


@dataclass(frozen=True)
class PaperMachine:
    id: str
    table: FlowTable
    encoding: StateEncoding
    # excitation/output equations as printed, with the complement bars we restore
    printed: Mapping[str, str] = field(default_factory=dict)
    notes: str = ""
    reconstructed: bool = False


def table_from_rows(
    inputs: Sequence[str],
    outputs: Sequence[str],
    columns: Sequence[str],
    rows: Sequence[tuple[str, Mapping[str, int | None], Sequence[str | None]]],
) -> FlowTable:
    """Build a flow table from figure-style rows.

    ``columns`` lists the input vectors as bit strings in the order the row
    entries are written; ``None`` or ``"-"`` marks a don't-care.
    """
    vectors = [tuple(int(c) for c in col) for col in columns]
    states = []
    for name, outs, entries in rows:
        nxt = {v: (None if e in (None, "-") else e) for v, e in zip(vectors, entries, strict=True)}
        states.append(StateRow(name, dict(outs), nxt))
    return FlowTable(tuple(inputs), tuple(outputs), tuple(states))


def machine_section1() -> PaperMachine:
    # row "1 1" of the transition matrix is all don't-care: its code stays unused
    table = table_from_rows(
        ["H"], ["Z"], ["0", "1"],
        [
            ("00", {"Z": 0}, ["00", "01"]),
            ("01", {"Z": 1}, [None, "10"]),
            ("10", {"Z": 0}, ["00", "10"]),
        ],
    )
    enc = StateEncoding.from_strings(["y1", "y0"], {"00": "00", "01": "01", "10": "10"})
    printed = {
        "y1": "y0 + H y1",
        "y0": "H ~y1 ~y0",
        "Z": "~y1 y0",
    }
    notes = (
        "y0 and Z are printed under a single overbar; only the per-literal "
        "complements ~y1 ~y0 H and ~y1 y0 agree with the transition matrix."
    )
    return PaperMachine("section1", table, enc, printed, notes)


def machine_section2() -> PaperMachine:
    table = table_from_rows(
        ["H", "CK"], ["Z"], ["00", "01", "11", "10"],
        [
            ("1", {"Z": 0}, ["1", "1", "2", "2"]),
            ("2", {"Z": 0}, [None, None, "2", "3"]),
            ("3", {"Z": 0}, [None, None, "4", "3"]),
            ("4", {"Z": 1}, [None, None, "4", "5"]),
            ("5", {"Z": 0}, ["6", "6", "5", "5"]),
            ("6", {"Z": 0}, ["1", "1", None, None]),
        ],
    )
    enc = StateEncoding.from_strings(
        ["y2", "y1", "y0"],
        {"1": "000", "2": "001", "3": "011", "4": "010", "5": "110", "6": "100"},
    )
    printed = {
        "y2": "y1 y2 + y1 ~y0 ~CK",
        "y1": "H y1 + H y0 ~CK",
        "y0": "H ~y1 + H y0 ~CK",
        "Z": "~y2 y1 ~y0",
    }
    notes = (
        "State 4 drives Z=1 (the encoded table wins over the '4/0' label). "
        "The printed equations lost their complement bars; the placements "
        "above are the ones that agree with the encoded table."
    )
    return PaperMachine("section2", table, enc, printed, notes)


def machine_reduced(wait_for_low: bool = False) -> PaperMachine:
    """Four-state clocked machine, reconstructed from its printed equations.

    00 idle, 01 armed, 11 Z high while CK is high, 10 wait for H to drop.
    By default H arms the machine at once; if H can arrive early in a CK
    high phase that phase is cut short.  ``wait_for_low=True`` keeps the
    machine idle until CK falls, which is what the printed five-literal y0
    equation describes, but its minimal cover ``y0 CK + H ~y1 ~CK`` has a
    static-1 hazard when CK rises in state 01.
    """
    idle_on_11 = "00" if wait_for_low else "01"
    table = table_from_rows(
        ["H", "CK"], ["Z"], ["00", "01", "11", "10"],
        [
            ("00", {"Z": 0}, ["00", "00", idle_on_11, "01"]),
            ("01", {"Z": 0}, [None, None, "11", "01"]),
            ("11", {"Z": 1}, [None, None, "11", "10"]),
            ("10", {"Z": 0}, ["00", "00", "10", "10"]),
        ],
    )
    enc = StateEncoding.from_strings(["y1", "y0"], {"00": "00", "01": "01", "11": "11", "10": "10"})
    printed = {"y1": "y0 CK + H y1", "Z": "y1 y0"}
    if wait_for_low:
        printed["y0"] = "y0 CK + H ~y1 ~CK"
    notes = (
        "Reconstructed: the reduced state graph is not legible. The printed "
        "y1 and Z equations hold literally and every transition is a one-bit "
        "change. The printed y0 (y0 CK + H ~y1 ~CK) belongs to the wait-for-low "
        "variant, whose cover glitches when CK rises in state 01; the default "
        "direct variant uses y0 CK + H ~y1 instead."
    )
    mid = "reduced-wait-low" if wait_for_low else "reduced"
    return PaperMachine(mid, table, enc, printed, notes, reconstructed=True)


MACHINES = {
    "section1": machine_section1,
    "section2": machine_section2,
    "reduced": machine_reduced,
}


@dataclass(frozen=True)
class Synthesis:
    exc: ExcitationTable
    equations: Equations
    netlist: Netlist
    races: tuple[RaceDiagnostic, ...]
    packages: PackageReport


def synthesize(table: FlowTable, enc: StateEncoding) -> Synthesis:
    exc = encode(table, enc)
    eqs = derive_equations(exc)
    forms = {}
    for name, sop in eqs.functions().items():
        forms[name] = sop if sop.is_constant else to_nor_form(sop)
    netlist = map_to_netlist(
        {b: forms[b] for b in exc.state_bits},
        {o: forms[o] for o in exc.output_vars},
        exc.inputs,
    )
    races = tuple(check_races(exc, eqs.next_state))
    return Synthesis(exc, eqs, netlist, races, package_count(netlist))


def clock_input(inputs: Sequence[str]) -> str | None:
    return next((i for i in inputs if i in CLOCK_NAMES), None)


def demo_stimulus(
    inputs: Sequence[str],
    h_width: int,
    ck_period: int | None = 20,
    delay: int = 1,
    h_rise: int | None = None,
) -> Stimulus:
    """H pulse of ``h_width`` on the first non-clock input, CK free-running.

    By default H rises two gate delays before the second falling CK edge,
    so the state starts moving only once CK is low and Z lands on the
    following high phase.
    """
    ck = clock_input(inputs)
    data = [i for i in inputs if i != ck]
    if not data:
        raise ValueError("machine has no data input to pulse")
    if ck is not None:
        period = ck_period or 20
        if h_rise is None:
            h_rise = 2 * period - 2 * delay
        t_end = h_rise + h_width + 3 * period
    else:
        if h_rise is None:
            h_rise = 10
        t_end = h_rise + h_width + 100
    waves = {i: SignalWave(0) for i in data}
    waves[data[0]] = pulse(h_rise, h_width)
    if ck is not None:
        waves[ck] = make_clock(period, t_end=t_end)
    return Stimulus(waves, t_end)


@dataclass(frozen=True)
class RunResult:
    h_width: int
    pulses: tuple[Pulse, ...]
    ck_offsets: tuple[int | None, ...]
    oscillations: tuple[Diagnostic, ...]
    warnings: tuple[Diagnostic, ...]
    trace: Trace = field(repr=False, compare=False)


@dataclass(frozen=True)
class VerificationReport:
    machine: str
    reconstructed: bool
    clocked: bool
    ck_period: int | None
    delay: int
    equations: Mapping[str, str]
    gates: int
    packages: int
    races: tuple[RaceDiagnostic, ...]
    runs: tuple[RunResult, ...]
    laws: Mapping[str, bool]

    @property
    def passed(self) -> bool:
        return all(self.laws.values())

    @property
    def bad_races(self) -> tuple[RaceDiagnostic, ...]:
        return tuple(r for r in self.races if r.kind in (RaceKind.CRITICAL, RaceKind.UNDEFINED))


def rising_edges(wave_changes: Sequence[tuple[int, int]]) -> list[int]:
    return [t for t, v in wave_changes if v]


def verify_method(
    m: PaperMachine,
    ck_period: int = 20,
    h_widths: Sequence[int] = (35, 200),
    d: DelayModel | None = None,
    output: str = "Z",
) -> VerificationReport:
    """Run encode, minimize, NOR-map and simulate, then judge the pulse laws.

    Clocked machines must hold Z for one CK high phase (width within
    P/2 +- 3 gate delays, same width for every H width); unclocked ones must
    emit a single pulse no wider than 3 gate delays.
    """
    d = d or DelayModel()
    tol = 3 * d.default
    syn = synthesize(m.table, m.encoding)
    ck = clock_input(m.table.input_vars)
    init = dict(zip(m.encoding.bits, m.encoding.codes[m.table.states[0].name]))

    runs = []
    for w in h_widths:
        stim = demo_stimulus(m.table.input_vars, w, ck_period if ck else None, d.default)
        trace = simulate(syn.netlist, stim, d, init)
        pulses = tuple(measure_pulses(trace, output))
        offsets: tuple[int | None, ...] = ()
        if ck:
            edges = rising_edges(stim.waves[ck].changes)
            offsets = tuple(
                min((p.start - e for e in edges if e <= p.start), default=None) for p in pulses
            )
        runs.append(RunResult(
            w, pulses, offsets,
            tuple(detect_oscillation(trace)),
            tuple(check_fundamental_mode(trace, stim, settle_window=tol)),
            trace,
        ))

    laws: dict[str, bool] = {}
    laws["one_pulse_per_h_event"] = all(len(r.pulses) == 1 for r in runs)
    if ck:
        lo, hi = ck_period / 2 - tol, ck_period / 2 + tol
        widths = [p.width for r in runs for p in r.pulses]
        laws["pulse_width_in_half_period"] = bool(widths) and all(
            p.width is not None and lo <= p.width <= hi for r in runs for p in r.pulses
        )
        laws["width_independent_of_h"] = (
            None not in widths and bool(widths) and max(widths) - min(widths) <= d.default
        )
    else:
        laws["short_pulse"] = all(p.width is not None and p.width <= tol for r in runs for p in r.pulses)
    laws["no_critical_races"] = not any(
        r.kind in (RaceKind.CRITICAL, RaceKind.UNDEFINED) for r in syn.races
    )
    laws["no_oscillation"] = not any(r.oscillations for r in runs)

    return VerificationReport(
        machine=m.id,
        reconstructed=m.reconstructed,
        clocked=ck is not None,
        ck_period=ck_period if ck else None,
        delay=d.default,
        equations={k: str(v) for k, v in syn.equations.functions().items()},
        gates=syn.packages.gates,
        packages=syn.packages.packages,
        races=syn.races,
        runs=tuple(runs),
        laws=laws,
    )


def sabotaged_section2(code_for_5: str = "111") -> PaperMachine:
    base = machine_section2()
    codes = {n: "".join(map(str, c)) for n, c in base.encoding.codes.items()}
    codes["5"] = code_for_5
    enc = StateEncoding.from_strings(base.encoding.bits, codes)
    return PaperMachine(f"section2-5={code_for_5}", base.table, enc, {}, "negative control")
