"""The ``.aft`` flow-table text format.

One directive per line, ``#`` starts a comment::

    inputs H CK
    outputs Z
    statebits y1 y0
    clock CK period=20 duty=1/2
    delay 1
    stim H 0 38:1 73:0
    horizon 200
    state 00 code=00 Z=0
      on 00 -> 00
      on 10 -> 01

Rows follow the figures: one ``state`` line per row, one indented ``on``
line per column.  ``-`` marks a don't-care and omitted columns are
don't-cares too.  Outputs are per state; ``Z=0000`` with one value per
column is accepted as long as the row is constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .eventsim import SignalWave
from .flow import Diagnostic, FlowTable, StateEncoding, StateRow, bits_str, input_vectors


class ParseError(ValueError):
    def __init__(self, line: int, col: int, message: str):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col
        self.message = message


@dataclass(frozen=True)
class ClockSpec:
    name: str
    period: int
    duty: Fraction = Fraction(1, 2)


@dataclass(frozen=True)
class FlowTableDocument:
    table: FlowTable
    encoding: StateEncoding | None = None
    clock: ClockSpec | None = None
    delay: int | None = None
    stimuli: Mapping[str, SignalWave] = field(default_factory=dict)
    horizon: int | None = None
    diagnostics: tuple[Diagnostic, ...] = field(default=(), compare=False)


def _bits(tok: str, lineno: int, col: int, what: str) -> tuple[int, ...]:
    if not tok or set(tok) - {"0", "1"}:
        raise ParseError(lineno, col, f"{what} {tok!r} is not a bit string")
    return tuple(int(c) for c in tok)


def _int(tok: str, lineno: int, col: int, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ParseError(lineno, col, f"{what} {tok!r} is not an integer") from None


def _output_value(key: str, val: str, k: int, lineno: int, col: int, diags: list) -> int | None:
    """One bit, ``-``, or one symbol per input column (which must all agree)."""
    if len(val) not in (1, 2 ** k) or set(val) - {"0", "1", "-"}:
        raise ParseError(lineno, col, f"output {key} takes one bit, '-' or {2 ** k} per-column values, got {val!r}")
    values = set(val)
    if len(values) > 1:
        diags.append(Diagnostic("non-moore-output", f"line {lineno}: output {key}={val} differs between input columns"))
        return None
    v = values.pop()
    return None if v == "-" else int(v)


def _tokens(line: str) -> list[tuple[int, str]]:
    """Whitespace-separated tokens with their 1-based columns."""
    out = []
    i = 0
    while i < len(line):
        if line[i].isspace():
            i += 1
            continue
        j = i
        while j < len(line) and not line[j].isspace():
            j += 1
        out.append((i + 1, line[i:j]))
        i = j
    return out


def parse_flow_table(text: str) -> FlowTableDocument:
    inputs: tuple[str, ...] | None = None
    outputs: tuple[str, ...] = ()
    statebits: tuple[str, ...] | None = None
    clock = None
    delay = None
    horizon = None
    stimuli: dict[str, SignalWave] = {}
    # name, outputs, next, code, line
    rows: list[tuple[str, dict, dict, tuple[int, ...] | None, int]] = []
    targets: list[tuple[int, str, str, tuple[int, ...]]] = []
    diags: list[Diagnostic] = []
    seen: dict[str, int] = {}
    current = None
    last = 0

    for lineno, raw in enumerate(text.splitlines(), 1):
        last = lineno
        line = raw.split("#", 1)[0].rstrip()
        toks = _tokens(line)
        if not toks:
            continue
        (col, word), args = toks[0], toks[1:]

        if word == "on":
            if current is None:
                raise ParseError(lineno, col, "'on' line outside a state block")
            if inputs is None:
                raise ParseError(lineno, col, "'on' line before 'inputs'")
            if len(args) != 3 or args[1][1] != "->":
                raise ParseError(lineno, col, "expected 'on <inputbits> -> <state|->'")
            vcol, vtok = args[0]
            v = _bits(vtok, lineno, vcol, "input vector")
            if len(v) != len(inputs):
                raise ParseError(lineno, vcol, f"input vector {vtok} has {len(v)} bits, expected {len(inputs)}")
            name, _, nxt, _, _ = current
            if v in nxt:
                diags.append(Diagnostic("duplicate-entry", f"line {lineno}: state {name!r} repeats input {vtok}"))
            target = args[2][1]
            nxt[v] = None if target == "-" else target
            if target != "-":
                targets.append((lineno, name, target, v))
            continue
        if raw[:1].isspace() and current is not None and word != "state":
            raise ParseError(lineno, col, f"unexpected {word!r} inside state block")

        current = None
        if word == "inputs":
            if not args:
                raise ParseError(lineno, col, "'inputs' needs at least one name")
            inputs = tuple(t for _, t in args)
        elif word == "outputs":
            outputs = tuple(t for _, t in args)
        elif word == "statebits":
            if not args:
                raise ParseError(lineno, col, "'statebits' needs at least one name")
            statebits = tuple(t for _, t in args)
        elif word == "clock":
            if not args:
                raise ParseError(lineno, col, "'clock' needs a signal name")
            opts = {"period": None, "duty": "1/2"}
            for acol, a in args[1:]:
                key, eq, val = a.partition("=")
                if not eq or key not in opts:
                    raise ParseError(lineno, acol, f"unknown clock option {a!r}")
                opts[key] = val
            if opts["period"] is None:
                raise ParseError(lineno, col, "'clock' needs period=<tu>")
            period = _int(opts["period"], lineno, col, "clock period")
            try:
                duty = Fraction(opts["duty"])
            except (ValueError, ZeroDivisionError):
                raise ParseError(lineno, col, f"bad duty {opts['duty']!r}") from None
            clock = ClockSpec(args[0][1], period, duty)
        elif word == "delay":
            if len(args) != 1:
                raise ParseError(lineno, col, "expected 'delay <tu>'")
            delay = _int(args[0][1], lineno, args[0][0], "delay")
        elif word == "horizon":
            if len(args) != 1:
                raise ParseError(lineno, col, "expected 'horizon <tu>'")
            horizon = _int(args[0][1], lineno, args[0][0], "horizon")
        elif word == "stim":
            if len(args) < 2:
                raise ParseError(lineno, col, "expected 'stim <name> <initial> [t:v ...]'")
            initial = _bits(args[1][1], lineno, args[1][0], "initial value")
            changes = []
            for acol, a in args[2:]:
                t, colon, v = a.partition(":")
                if not colon:
                    raise ParseError(lineno, acol, f"expected <time>:<value>, got {a!r}")
                changes.append((_int(t, lineno, acol, "time"), _bits(v, lineno, acol, "value")[0]))
            try:
                stimuli[args[0][1]] = SignalWave(initial[0], tuple(changes))
            except ValueError as e:
                raise ParseError(lineno, args[0][0], str(e)) from None
        elif word == "state":
            if not args:
                raise ParseError(lineno, col, "'state' needs a name")
            name = args[0][1]
            outs: dict[str, int | None] = {o: None for o in outputs}
            code = None
            for acol, a in args[1:]:
                key, eq, val = a.partition("=")
                if not eq:
                    raise ParseError(lineno, acol, f"expected key=value, got {a!r}")
                if key == "code":
                    code = _bits(val, lineno, acol, "code")
                elif key in outputs:
                    outs[key] = _output_value(key, val, len(inputs or ()), lineno, acol, diags)
                else:
                    raise ParseError(lineno, acol, f"{key!r} is not an output or 'code'")
            row = (name, outs, {}, code, lineno)
            if name in seen:
                diags.append(Diagnostic("duplicate-state", f"line {lineno}: state {name!r} already defined on line {seen[name]}"))
                current = row  # parse its entries, then drop it
                continue
            seen[name] = lineno
            rows.append(row)
            current = row
        else:
            raise ParseError(lineno, col, f"unknown directive {word!r}")

    if inputs is None:
        raise ParseError(max(last, 1), 1, "no states" if not rows else "missing 'inputs' line")
    if not rows:
        raise ParseError(max(last, 1), 1, "no states")

    for lineno, src, target, v in targets:
        if target not in seen:
            diags.append(Diagnostic("dangling-target", f"line {lineno}: state {src!r} input {bits_str(v)} goes to unknown state {target!r}"))

    states = []
    for name, outs, nxt, _, _ in rows:
        full = {v: nxt.get(v) for v in input_vectors(len(inputs))}
        states.append(StateRow(name, outs, full))
    table = FlowTable(inputs, outputs, tuple(states))

    encoding = None
    coded = [r for r in rows if r[3] is not None]
    if coded:
        missing = [r for r in rows if r[3] is None]
        if missing:
            raise ParseError(missing[0][4], 1, f"state {missing[0][0]!r} has no code while others do")
        widths = {len(r[3]) for r in rows}
        if len(widths) != 1:
            bad = next(r for r in rows if len(r[3]) != len(rows[0][3]))
            raise ParseError(bad[4], 1, f"code of state {bad[0]!r} has a different width")
        m = widths.pop()
        bits = statebits or tuple(f"y{i}" for i in reversed(range(m)))
        if len(bits) != m:
            raise ParseError(rows[0][4], 1, f"codes have {m} bits but statebits names {len(bits)}")
        try:
            encoding = StateEncoding(bits, {r[0]: r[3] for r in rows})
        except ValueError as e:
            diags.append(Diagnostic("bad-encoding", str(e)))

    for name in stimuli:
        if name not in inputs:
            diags.append(Diagnostic("unknown-stimulus", f"stim drives {name!r}, which is not an input"))
    if clock is not None and clock.name not in inputs:
        diags.append(Diagnostic("unknown-clock", f"clock {clock.name!r} is not an input"))

    return FlowTableDocument(table, encoding, clock, delay, stimuli, horizon, tuple(diags))


def render(doc: FlowTableDocument) -> str:
    ft = doc.table
    lines = [f"inputs {' '.join(ft.input_vars)}"]
    if ft.output_vars:
        lines.append(f"outputs {' '.join(ft.output_vars)}")
    if doc.encoding is not None:
        lines.append(f"statebits {' '.join(doc.encoding.bits)}")
    if doc.clock is not None:
        lines.append(f"clock {doc.clock.name} period={doc.clock.period} duty={doc.clock.duty}")
    if doc.delay is not None:
        lines.append(f"delay {doc.delay}")
    for name, w in doc.stimuli.items():
        lines.append(" ".join([f"stim {name} {w.initial}"] + [f"{t}:{v}" for t, v in w.changes]))
    if doc.horizon is not None:
        lines.append(f"horizon {doc.horizon}")
    for row in ft.states:
        head = [f"state {row.name}"]
        if doc.encoding is not None:
            head.append(f"code={bits_str(doc.encoding.codes[row.name])}")
        head += [f"{o}={bits_str([row.outputs.get(o)])}" for o in ft.output_vars]
        lines.append(" ".join(head))
        for v in input_vectors(len(ft.input_vars)):
            target = row.next.get(v)
            lines.append(f"  on {bits_str(v)} -> {'-' if target is None else target}")
    return "\n".join(lines) + "\n"


def load(path) -> FlowTableDocument:
    with open(path, encoding="utf-8") as f:
        return parse_flow_table(f.read())
