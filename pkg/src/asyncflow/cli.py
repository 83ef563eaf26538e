"""Command-line front end: ``asyncflow check|synth|sim|demo|report``.

Exit status is 0 when everything passes, 1 when diagnostics were raised
and 2 for usage or parse errors.  Errors go to stderr.
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from .aftio import FlowTableDocument, ParseError, load
from .eventsim import DelayModel, Stimulus, detect_oscillation, check_fundamental_mode, make_clock, measure_pulses, simulate
from .flow import RaceKind, default_encoding, validate_flow_table
from .scenarios import (
    MACHINES,
    PaperMachine,
    VerificationReport,
    clock_input,
    demo_stimulus,
    synthesize,
    verify_method,
)
from .vcd import write_waveform

DEFAULT_PERIOD = 20
DEFAULT_WIDTHS = (35, 200)
DEFAULT_DELAY = 1

BAD_RACES = (RaceKind.CRITICAL, RaceKind.UNDEFINED)


class UsageError(Exception):
    pass


def _pulse_text(p) -> str:
    return f"{p.start}+{p.width if p.width is not None else 'open'}"


def report_text(r: VerificationReport) -> str:
    lines = [f"machine {r.machine}" + (" (reconstructed)" if r.reconstructed else "")]
    for name, eq in r.equations.items():
        lines.append(f"  {name} = {eq}")
    lines.append(f"  {r.gates} NOR gates, {r.packages} packages")
    for race in r.races:
        if race.kind is not RaceKind.ADJACENT:
            lines.append(f"  race {race}")
    for run in r.runs:
        pulses = ", ".join(_pulse_text(p) for p in run.pulses) or "none"
        line = f"  H width {run.h_width}: Z pulses {pulses}"
        if r.clocked:
            offs = ", ".join("-" if o is None else str(o) for o in run.ck_offsets)
            line += f"; after CK rise {offs}"
        lines.append(line)
        for d in run.oscillations + run.warnings:
            lines.append(f"    {d}")
    for law, ok in r.laws.items():
        lines.append(f"  {'PASS' if ok else 'FAIL'} {law}")
    lines.append("PASS" if r.passed else "FAIL")
    return "\n".join(lines) + "\n"


def report_kv(r: VerificationReport) -> str:
    kv: list[tuple[str, object]] = [
        ("machine", r.machine),
        ("reconstructed", int(r.reconstructed)),
        ("clocked", int(r.clocked)),
        ("ck_period", r.ck_period if r.ck_period is not None else "-"),
        ("delay", r.delay),
    ]
    kv += [(f"eq.{k}", v) for k, v in r.equations.items()]
    kv += [("gates", r.gates), ("packages", r.packages)]
    for kind in RaceKind:
        kv.append((f"races.{kind.value}", sum(x.kind is kind for x in r.races)))
    for run in r.runs:
        pre = f"run.{run.h_width}"
        kv.append((f"{pre}.pulses", len(run.pulses)))
        kv.append((f"{pre}.widths", ",".join("open" if p.width is None else str(p.width) for p in run.pulses) or "-"))
        if r.clocked:
            kv.append((f"{pre}.ck_offsets", ",".join("-" if o is None else str(o) for o in run.ck_offsets) or "-"))
        kv.append((f"{pre}.oscillations", len(run.oscillations)))
        kv.append((f"{pre}.warnings", len(run.warnings)))
    kv += [(f"law.{k}", int(v)) for k, v in r.laws.items()]
    kv.append(("pass", int(r.passed)))
    return "".join(f"{k}={v}\n" for k, v in kv)


def _machine_from_doc(doc: FlowTableDocument, name: str) -> PaperMachine:
    enc = doc.encoding or default_encoding(doc.table)
    return PaperMachine(name, doc.table, enc)


def _load(path: str) -> FlowTableDocument:
    try:
        return load(path)
    except OSError as e:
        raise UsageError(f"{path}: {e.strerror or e}") from None
    except ParseError as e:
        raise UsageError(f"{path}: {e}") from None


def _structural(doc: FlowTableDocument) -> list:
    reported = {d.kind for d in doc.diagnostics}
    extra = [d for d in validate_flow_table(doc.table) if d.kind not in reported]
    return list(doc.diagnostics) + extra


def cmd_check(args, out) -> int:
    doc = _load(args.file)
    diags = _structural(doc)
    for d in diags:
        print(f"{args.file}: {d}", file=sys.stderr)
    if any(d.kind in ("dangling-target", "duplicate-state", "bad-encoding", "missing-input") for d in diags):
        return 1
    enc = doc.encoding or default_encoding(doc.table)
    syn = synthesize(doc.table, enc)
    bad = 0
    for race in syn.races:
        print(f"race {race}", file=out)
        bad += race.kind in BAD_RACES
    print(f"{len(syn.races)} transitions, {bad} critical or undefined", file=out)
    return 1 if diags or bad else 0


def cmd_synth(args, out) -> int:
    doc = _load(args.file)
    if any(d.kind in ("dangling-target", "bad-encoding") for d in doc.diagnostics):
        for d in doc.diagnostics:
            print(f"{args.file}: {d}", file=sys.stderr)
        return 1
    enc = doc.encoding or default_encoding(doc.table)
    syn = synthesize(doc.table, enc)
    for name, sop in syn.equations.functions().items():
        print(f"{name} = {sop}", file=out)
    print(file=out)
    out.write(syn.netlist.dump())
    print(file=out)
    print(syn.packages, file=out)
    return 0


def _pick(*values):
    return next((v for v in values if v is not None), None)


def _sim_stimulus(doc: FlowTableDocument, args, ck: str | None, delay: int) -> Stimulus:
    period = _pick(args.ck_period, doc.clock.period if doc.clock else None, DEFAULT_PERIOD)
    if args.h_width is None and doc.stimuli:
        waves = {i: doc.stimuli.get(i) for i in doc.table.input_vars if i != ck}
        missing = [i for i, w in waves.items() if w is None]
        if missing:
            raise UsageError(f"no stim line for inputs {missing}")
        last = max((t for w in waves.values() for t, _ in w.changes), default=0)
        t_end = doc.horizon or last + 3 * period + 100
        if ck is not None:
            duty = doc.clock.duty if doc.clock else 0.5
            waves[ck] = make_clock(period, duty, t_end)
        try:
            return Stimulus(waves, t_end)
        except ValueError as e:
            raise UsageError(str(e)) from None
    width = args.h_width if args.h_width is not None else DEFAULT_WIDTHS[0]
    return demo_stimulus(doc.table.input_vars, width, period if ck else None, delay)


def cmd_sim(args, out) -> int:
    doc = _load(args.file)
    if any(d.kind in ("dangling-target", "bad-encoding") for d in doc.diagnostics):
        for d in doc.diagnostics:
            print(f"{args.file}: {d}", file=sys.stderr)
        return 1
    delay = _pick(args.delay, doc.delay, DEFAULT_DELAY)
    if delay < 1 or (args.ck_period is not None and args.ck_period < 2):
        raise UsageError("delay must be >= 1 and the clock period >= 2")
    if args.h_width is not None and args.h_width < 1:
        raise UsageError("H width must be >= 1")
    enc = doc.encoding or default_encoding(doc.table)
    syn = synthesize(doc.table, enc)
    ck = clock_input(doc.table.input_vars)
    if doc.clock is not None:
        ck = doc.clock.name
    stim = _sim_stimulus(doc, args, ck, delay)
    dm = DelayModel(delay)
    init = dict(zip(enc.bits, enc.codes[doc.table.states[0].name]))
    trace = simulate(syn.netlist, stim, dm, init)
    diags = list(trace.diagnostics) + detect_oscillation(trace)
    warnings = check_fundamental_mode(trace, stim, 3 * delay)
    for o in doc.table.output_vars:
        pulses = measure_pulses(trace, o)
        print(f"{o} pulses: {', '.join(_pulse_text(p) for p in pulses) or 'none'}", file=out)
    for d in diags + warnings:
        print(str(d), file=out)
    if args.out:
        with open(args.out, "wb") as f:
            f.write(write_waveform(trace))
    return 1 if diags else 0


def cmd_demo(args, out) -> int:
    m = MACHINES[args.machine]()
    r = verify_method(m, args.ck_period, tuple(args.h_width or DEFAULT_WIDTHS), DelayModel(args.delay))
    out.write(report_kv(r) if args.kv else report_text(r))
    return 0 if r.passed else 1


def cmd_report(args, out) -> int:
    doc = _load(args.file)
    diags = _structural(doc)
    if any(d.kind in ("dangling-target", "bad-encoding") for d in diags):
        for d in diags:
            print(f"{args.file}: {d}", file=sys.stderr)
        return 1
    name = args.file.rsplit("/", 1)[-1].removesuffix(".aft")
    period = _pick(args.ck_period, doc.clock.period if doc.clock else None, DEFAULT_PERIOD)
    delay = _pick(args.delay, doc.delay, DEFAULT_DELAY)
    r = verify_method(_machine_from_doc(doc, name), period, tuple(args.h_width or DEFAULT_WIDTHS), DelayModel(delay))
    out.write(report_kv(r))
    return 0 if r.passed else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="asyncflow", description="Asynchronous flow-table synthesis and simulation.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="validate a flow table and classify its state transitions")
    c.add_argument("file")
    c.set_defaults(func=cmd_check)

    c = sub.add_parser("synth", help="print minimized equations, the NOR netlist and the package count")
    c.add_argument("file")
    c.set_defaults(func=cmd_synth)

    c = sub.add_parser("sim", help="simulate one H pulse and report output pulses")
    c.add_argument("file")
    c.add_argument("--ck-period", type=int)
    c.add_argument("--h-width", type=int)
    c.add_argument("--delay", type=int)
    c.add_argument("--out", help="write a VCD waveform here")
    c.set_defaults(func=cmd_sim)

    c = sub.add_parser("demo", help="run the built-in verification for one machine")
    c.add_argument("machine", choices=sorted(MACHINES))
    c.add_argument("--ck-period", type=int, default=DEFAULT_PERIOD)
    c.add_argument("--h-width", type=int, action="append")
    c.add_argument("--delay", type=int, default=DEFAULT_DELAY)
    c.add_argument("--kv", action="store_true", help="key=value output")
    c.set_defaults(func=cmd_demo)

    c = sub.add_parser("report", help="full pipeline on a file, key=value output")
    c.add_argument("file")
    c.add_argument("--ck-period", type=int)
    c.add_argument("--h-width", type=int, action="append")
    c.add_argument("--delay", type=int)
    c.set_defaults(func=cmd_report)
    return p


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 2
    try:
        return args.func(args, out)
    except UsageError as e:
        print(f"asyncflow: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"asyncflow: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
