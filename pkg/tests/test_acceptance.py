"""Acceptance criteria 1-10, one test each, with a one-line PASS/FAIL verdict per criterion.

Run ``pytest tests/test_acceptance.py -v``; the verdict lines are repeated in
the terminal summary.  ``python tests/test_acceptance.py`` prints them alone.
"""

import io
import itertools
import random
from importlib import resources

import pytest

from asyncflow.aftio import parse_flow_table, render
from asyncflow.boolmin import TruthSpec, equivalent_on_careset, parse_sop, qm_minimize, sop_eval
from asyncflow.cli import main
from asyncflow.eventsim import DelayModel, SignalWave, Stimulus, measure_pulses, simulate
from asyncflow.flow import RaceKind, Stable, encode, hamming, input_vectors, settle
from asyncflow.scenarios import (
    MACHINES,
    demo_stimulus,
    machine_reduced,
    machine_section1,
    machine_section2,
    rising_edges,
    sabotaged_section2,
    synthesize,
)
from asyncflow.vcd import read_vcd, write_waveform

import figures

VERDICTS: dict[int, str] = {}


def verdict(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    VERDICTS[n] = line
    print(line)
    assert ok, line


def bits(s):
    return tuple(int(c) for c in s)


# 1 ---------------------------------------------------------------------------

def check_transcription():
    mismatches = []
    m1 = machine_section1()
    nxt3, z3 = figures.fig3()
    for (code, h), want in nxt3.items():
        name = m1.encoding.name_of(bits(code))
        if name is None:
            if want is not None:
                mismatches.append(f"fig3 {code}/{h}: code unused")
            continue
        got = m1.table.next_state(name, (int(h),))
        if got != want:
            mismatches.append(f"fig3 {code}/{h}: {got} != {want}")
    for code, want in z3.items():
        name = m1.encoding.name_of(bits(code))
        got = None if name is None else m1.table.row(name).outputs["Z"]
        if got != want:
            mismatches.append(f"fig3 Z {code}: {got} != {want}")

    m2 = machine_section2()
    nxt5a, z5a, codes5a = figures.fig5a()
    for (state, col), want in nxt5a.items():
        got = m2.table.next_state(state, bits(col))
        if got != want:
            mismatches.append(f"fig5a {state}/{col}: {got} != {want}")
    for state, code in codes5a.items():
        if m2.encoding.codes[state] != bits(code):
            mismatches.append(f"fig5a code {state}")
    conflicts = []
    exc = encode(m2.table, m2.encoding)
    nxt5b, z5b = figures.fig5b()
    for (code, col), want in nxt5b.items():
        got = exc.entries[bits(code), bits(col)]
        if got != (None if want is None else bits(want)):
            mismatches.append(f"fig5b {code}/{col}")
        zgot = exc.outputs[bits(code)][0]
        if zgot != z5b[code, col]:
            mismatches.append(f"fig5b Z {code}/{col}: {zgot} != {z5b[code, col]}")
    for state, zlabel in z5a.items():
        if m2.table.row(state).outputs["Z"] != zlabel:
            # the two figures disagree; the encoded table and the Z equation side with 5b
            conflicts.append(f"state {state} label /{zlabel} vs Z={m2.table.row(state).outputs['Z']} in 5b")
    cells = len(nxt3) + len(z3) + len(nxt5a) + len(codes5a) + 2 * len(nxt5b)
    return mismatches, conflicts, cells


def test_criterion_1_transcription():
    mismatches, conflicts, cells = check_transcription()
    detail = f"{cells} cells, {len(mismatches)} mismatches"
    if conflicts:
        detail += f"; figure conflict resolved for 5b: {', '.join(conflicts)}"
    verdict(1, not mismatches and len(conflicts) <= 1, detail)


# 2 ---------------------------------------------------------------------------

def test_criterion_2_equation_oracle():
    names = ("H", "CK", "y2", "y1", "y0")
    nxt5b, z5b = figures.fig5b()
    on = {f: set() for f in ("y2", "y1", "y0", "Z")}
    dc = {f: set() for f in on}
    for (code, col), want in nxt5b.items():
        m = int(col + code, 2)
        for i, f in enumerate(("y2", "y1", "y0")):
            if want is None:
                dc[f].add(m)
            elif want[i] == "1":
                on[f].add(m)
        z = z5b[code, col]
        if z is None:
            dc["Z"].add(m)
        elif z:
            on["Z"].add(m)
    m2 = machine_section2()
    eqs = synthesize(m2.table, m2.encoding).equations.functions()
    bad = [f for f in on if not equivalent_on_careset(eqs[f], TruthSpec(names, on[f], dc[f]))]

    m1 = machine_section1()
    y1 = synthesize(m1.table, m1.encoding).equations.next_state["y1"]
    paper_y1 = parse_sop("y0 + y1 H", ("H", "y1", "y0"))
    same = set(y1.cubes) == set(paper_y1.cubes)
    verdict(2, not bad and same,
            f"machine #2 columns off the care set: {bad or 'none'}; machine #1 next-y1 = {y1} "
            f"({'equals' if same else 'differs from'} y0 + y1 H)")


# 3 ---------------------------------------------------------------------------

def _is_prime(pattern, spec):
    off = spec.off_set
    n = spec.nvars
    for i, c in enumerate(pattern):
        if c == "-":
            continue
        wider = pattern[:i] + "-" + pattern[i + 1:]
        hits = [int("".join(map(str, b)), 2) for b in itertools.product((0, 1), repeat=n)
                if all(p == "-" or int(p) == x for p, x in zip(wider, b))]
        if not any(h in off for h in hits):
            return False
    return True


def test_criterion_3_minimizer_soundness():
    rng = random.Random(20240601)
    failures = 0
    for _ in range(100):
        n = rng.randint(1, 4)
        labels = [rng.choice("01-") for _ in range(2 ** n)]
        names = tuple(f"v{i}" for i in range(n))
        spec = TruthSpec(names, {m for m, c in enumerate(labels) if c == "1"},
                         {m for m, c in enumerate(labels) if c == "-"})
        s = qm_minimize(spec)
        for m, b in enumerate(itertools.product((0, 1), repeat=n)):
            if m not in spec.dc_set and sop_eval(s, dict(zip(names, b))) != (m in spec.on_set):
                failures += 1
                break
        else:
            failures += not all(_is_prime(c.pattern, spec) for c in s.cubes)
    verdict(3, failures == 0, f"100 random specs, {failures} unsound or non-prime covers")


# 4 ---------------------------------------------------------------------------

def nor_mapping_mismatches(m):
    syn = synthesize(m.table, m.encoding)
    n, fns = syn.netlist, syn.equations.functions()
    bad = 0
    names = n.inputs + n.state_bits
    for b in itertools.product((0, 1), repeat=len(names)):
        a = dict(zip(names, b))
        vals = n.evaluate_open(a)
        bad += any(vals[f"{s}_next"] != sop_eval(fns[s], a) for s in n.state_bits)
        bad += any(vals[net] != sop_eval(fns[o], a) for o, net in n.outputs.items())
    return bad, 2 ** len(names)


def test_criterion_4_nor_mapping():
    parts, total = [], 0
    for mid, f in MACHINES.items():
        bad, pts = nor_mapping_mismatches(f())
        parts.append(f"{mid} {pts} points")
        total += bad
    verdict(4, total == 0, f"{', '.join(parts)}; {total} mismatches")


# 5 ---------------------------------------------------------------------------

def test_criterion_5_short_pulse():
    m = machine_section1()
    syn = synthesize(m.table, m.encoding)
    stim = demo_stimulus(m.table.input_vars, 100)
    t = simulate(syn.netlist, stim, DelayModel(1), {"y1": 0, "y0": 0})
    pulses = measure_pulses(t, "Z")
    ok = len(pulses) == 1 and pulses[0].width is not None and pulses[0].width <= 3
    shown = ", ".join(f"{p.start}+{p.width}" for p in pulses[:4]) + (" ..." if len(pulses) > 4 else "")
    verdict(5, ok, f"machine #1, H held 100 tu: {len(pulses)} Z pulses ({shown})")


# 6 ---------------------------------------------------------------------------

def clock_width_check(m, period=20, widths=(35, 200), d=1, max_offset=3):
    syn = synthesize(m.table, m.encoding)
    init = dict(zip(m.encoding.bits, m.encoding.codes[m.table.states[0].name]))
    runs = []
    for w in widths:
        stim = demo_stimulus(m.table.input_vars, w, period, d)
        t = simulate(syn.netlist, stim, DelayModel(d), init)
        pulses = measure_pulses(t, "Z")
        edges = rising_edges(stim.waves["CK"].changes)
        offs = [min((p.start - e for e in edges if e <= p.start), default=None) for p in pulses]
        runs.append((w, pulses, offs))
    one = all(len(p) == 1 for _, p, _ in runs)
    ws = [p.width for _, ps, _ in runs for p in ps]
    in_range = bool(ws) and all(x is not None and period / 2 - 3 * d <= x <= period / 2 + 3 * d for x in ws)
    equal = in_range and max(ws) - min(ws) <= d
    aligned = all(o is not None and 0 <= o <= max_offset for _, _, offs in runs for o in offs)
    checks = {"one pulse": one, "width": in_range, "equal widths": equal, "CK offset": aligned}
    detail = "; ".join(f"H={w}: Z " + ",".join(f"{p.start}+{p.width}" for p in ps) + f" offset {offs}"
                       for w, ps, offs in runs)
    failed = [k for k, v in checks.items() if not v]
    return not failed, detail + (f"; failed: {', '.join(failed)}" if failed else "")


def test_criterion_6_clock_width():
    ok, detail = clock_width_check(machine_section2())
    verdict(6, ok, f"machine #2, P=20: {detail}")


# 7 ---------------------------------------------------------------------------

def races(m):
    return synthesize(m.table, m.encoding).races


def test_criterion_7_races():
    r2 = races(machine_section2())
    critical = [r for r in r2 if r.kind is RaceKind.CRITICAL]
    kinds = {(r.source, r.target): r.kind for r in r2}
    adjacent = all(kinds.get(p) is RaceKind.ADJACENT for p in (("5", "6"), ("6", "1")))
    sab = [r for r in races(sabotaged_section2()) if r.kind is not RaceKind.ADJACENT]
    verdict(7, not critical and adjacent and len(sab) >= 1,
            f"machine #2: {len(critical)} critical, 5->6 and 6->1 adjacent={adjacent}; "
            f"5=111: {len(sab)} race diagnostics")


# 8 ---------------------------------------------------------------------------

def conformance(m, t_change=20, horizon=200):
    syn = synthesize(m.table, m.encoding)
    ft, enc = m.table, m.encoding
    results = []
    for row in ft.states:
        for v in input_vectors(len(ft.input_vars)):
            if ft.next_state(row.name, v) != row.name:
                continue
            for i in range(len(v)):
                w = v[:i] + (1 - v[i],) + v[i + 1:]
                want = settle(ft, row.name, w)
                if not isinstance(want, Stable):
                    continue
                waves = {x: SignalWave(v[j], ((t_change, w[j]),) if j == i else ())
                         for j, x in enumerate(ft.input_vars)}
                t = simulate(syn.netlist, Stimulus(waves, horizon), init=dict(zip(enc.bits, enc.codes[row.name])))
                last = max((c[-1][0] for c in t.changes.values() if c), default=0)
                ok = (t.state_code(horizon) == enc.codes[want.state]
                      and last < horizon - 50 and not t.diagnostics)
                results.append((row.name, v, w, want.state, ok))
    return results


def test_criterion_8_conformance():
    parts, ok = [], True
    for m in (machine_section1(), machine_section2()):
        res = conformance(m)
        bad = [f"{s}@{''.join(map(str, v))}->{''.join(map(str, w))}" for s, v, w, _, good in res if not good]
        ok &= not bad
        parts.append(f"{m.id}: {len(res) - len(bad)}/{len(res)} settle as predicted"
                     + (f" (off: {', '.join(bad)})" if bad else ""))
    verdict(8, ok, "; ".join(parts))


# 9 ---------------------------------------------------------------------------

def test_criterion_9_reduced_machine():
    m = machine_reduced()
    nor_bad, _ = nor_mapping_mismatches(m)
    width_ok, detail = clock_width_check(m)
    steps = [(row.name, t) for row in m.table.states for t in row.next.values() if t not in (None, row.name)]
    adjacent = all(hamming(m.encoding.codes[a], m.encoding.codes[b]) == 1 for a, b in steps)
    verdict(9, nor_bad == 0 and width_ok and adjacent,
            f"reconstructed reduced machine: NOR mismatches {nor_bad}; {detail}; "
            f"{len(steps)} transitions, all adjacent={adjacent}")


# 10 --------------------------------------------------------------------------

def test_criterion_10_io():
    problems = []
    for name in ("section1", "section2", "reduced"):
        text = resources.files("asyncflow").joinpath("machines", f"{name}.aft").read_text()
        doc = parse_flow_table(text)
        if parse_flow_table(render(doc)) != doc:
            problems.append(f"{name} round-trip")
        m = MACHINES[name]()
        syn = synthesize(m.table, m.encoding)
        init = dict(zip(m.encoding.bits, m.encoding.codes[m.table.states[0].name]))
        t = simulate(syn.netlist, demo_stimulus(m.table.input_vars, 35), init=init)
        dump = read_vcd(write_waveform(t))
        for sig, (v0, changes) in dump.items():
            if v0 != t.initial[t.net(sig)] or changes != t.history(sig):
                problems.append(f"{name} dump of {sig}")
    outs = []
    for _ in range(2):
        buf = io.StringIO()
        outs.append((main(["demo", "section2"], buf), buf.getvalue()))
    if outs[0][0] != 0:
        problems.append(f"demo section2 exit {outs[0][0]}")
    if outs[0] != outs[1]:
        problems.append("demo section2 output differs between runs")
    verdict(10, not problems, "3 files round-trip, dumps match traces, demo section2 exit 0 twice with identical output"
            if not problems else "; ".join(problems))


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
