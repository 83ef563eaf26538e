import pytest
from hypothesis import given, settings, strategies as st

from asyncflow.boolmin import equivalent_on_careset, excitation_specs, parse_sop
from asyncflow.eventsim import DelayModel, measure_pulses, simulate
from asyncflow.flow import RaceKind, encode, hamming, validate_flow_table
from asyncflow.scenarios import (
    MACHINES,
    clock_input,
    demo_stimulus,
    machine_reduced,
    machine_section1,
    machine_section2,
    sabotaged_section2,
    synthesize,
    table_from_rows,
    verify_method,
)


def all_machines():
    return [machine_section1(), machine_section2(), machine_reduced(), machine_reduced(wait_for_low=True)]


@pytest.mark.parametrize("m", all_machines(), ids=lambda m: m.id)
def test_printed_equations_agree_with_tables(m):
    exc = encode(m.table, m.encoding)
    specs = excitation_specs(exc)
    names = exc.inputs + exc.state_bits
    assert m.printed
    for fn, text in m.printed.items():
        assert equivalent_on_careset(parse_sop(text, names), specs[fn]), fn


@pytest.mark.parametrize("m", all_machines(), ids=lambda m: m.id)
def test_tables_are_clean(m):
    assert validate_flow_table(m.table) == []


def test_derived_equations_frozen():
    eqs = {mid: {k: str(v) for k, v in synthesize(f().table, f().encoding).equations.functions().items()}
           for mid, f in MACHINES.items()}
    assert eqs["section1"] == {"y1": "H y1 + y0", "y0": "H ~y1 ~y0", "Z": "y0"}
    assert eqs["section2"] == {
        "y2": "y2 y1 + ~CK y1 ~y0",
        "y1": "H y1 + ~CK y0",
        "y0": "H ~y1 + ~CK y0",
        "Z": "~y2 y1 ~y0",
    }
    assert eqs["reduced"] == {"y1": "CK y0 + H y1", "y0": "CK y0 + H ~y1", "Z": "y1 y0"}


def test_section1_z_reading_on_defined_codes():
    # Z minimizes to y0 because code 11 is free; on used codes it is ~y1 y0
    m = machine_section1()
    z = synthesize(m.table, m.encoding).equations.outputs["Z"]
    for name, code in m.encoding.codes.items():
        a = {"H": 0, "y1": code[0], "y0": code[1]}
        assert z.evaluate(a) == (name == "01")


def test_reduced_is_reconstructed_and_adjacent():
    for m in (machine_reduced(), machine_reduced(True)):
        assert m.reconstructed and "Reconstructed" in m.notes
        for row in m.table.states:
            for t in row.next.values():
                if t is not None and t != row.name:
                    assert hamming(m.encoding.codes[row.name], m.encoding.codes[t]) == 1
    assert machine_reduced().id == "reduced"


def test_table_from_rows_dont_cares():
    ft = table_from_rows(["H"], ["Z"], ["0", "1"], [("a", {"Z": 0}, ["a", "-"])])
    assert ft.next_state("a", (1,)) is None


def test_clock_input_detection():
    assert clock_input(("H", "CK")) == "CK"
    assert clock_input(("H",)) is None


def test_demo_stimulus_shape():
    s = demo_stimulus(("H", "CK"), 35)
    assert s.waves["H"].changes == ((38, 1), (73, 0))
    assert s.waves["CK"].changes[0] == (10, 1)
    assert s.t_end == 38 + 35 + 60
    s = demo_stimulus(("H",), 100)
    assert s.waves["H"].changes == ((10, 1), (110, 0))
    with pytest.raises(ValueError):
        demo_stimulus(("CK",), 10)


def test_section2_report_passes():
    r = verify_method(machine_section2())
    assert r.passed and r.clocked and not r.bad_races
    assert [[p.width for p in run.pulses] for run in r.runs] == [[10], [10]]
    assert all(run.warnings == () for run in r.runs)
    # CK -> product NOR -> sum NOR -> inverter -> Z NOR
    assert [run.ck_offsets for run in r.runs] == [(4,), (4,)]
    assert (r.gates, r.packages) == (17, 9)


def test_reduced_report_passes():
    r = verify_method(machine_reduced())
    assert r.passed and r.reconstructed
    assert [[p.width for p in run.pulses] for run in r.runs] == [[10], [10]]


def test_reduced_wait_for_low_variant_glitches():
    # its minimal y0 cover drops both cubes for a moment when CK rises in state 01
    r = verify_method(machine_reduced(wait_for_low=True))
    assert not r.laws["one_pulse_per_h_event"]
    assert r.laws["no_critical_races"]
    assert all(len(run.pulses) > 1 for run in r.runs)


def test_section1_ring_oscillates_under_uniform_delay():
    # y0 resets itself after one gate delay; the y1 latch needs three to catch it
    r = verify_method(machine_section1(), h_widths=(100,))
    (run,) = r.runs
    assert not r.laws["no_oscillation"]
    assert len(run.pulses) > 1 and all(p.width == 1 for p in run.pulses if p.width)
    assert r.laws["short_pulse"]


def test_section1_latches_when_the_loop_is_slow():
    # a slower y0 self-loop gives the y1 latch time to close: one short pulse
    m = machine_section1()
    syn = synthesize(m.table, m.encoding)
    stim = demo_stimulus(m.table.input_vars, 100)
    t = simulate(syn.netlist, stim, DelayModel(1, {"y0_next": 4}), {"y1": 0, "y0": 0})
    pulses = measure_pulses(t, "Z")
    assert len(pulses) == 1 and pulses[0].width == 4


def test_sabotaged_encoding_fails():
    r = verify_method(sabotaged_section2())
    assert not r.passed and not r.laws["no_critical_races"]
    assert any(x.kind is RaceKind.CRITICAL for x in r.races)


def test_cross_machine_widths_agree():
    a = verify_method(machine_section2(), h_widths=(35, 200))
    b = verify_method(machine_reduced(), h_widths=(35, 200))
    for ra, rb in zip(a.runs, b.runs):
        assert abs(ra.pulses[0].width - rb.pulses[0].width) <= 2


@settings(max_examples=25, deadline=None)
@given(st.data())
def test_clocked_width_tracks_half_period(data):
    d = data.draw(st.integers(1, 3))
    period = 2 * data.draw(st.integers(7 * d, 30))
    width = data.draw(st.integers(2 * period, 10 * period))
    mid = data.draw(st.sampled_from(["section2", "reduced"]))
    r = verify_method(MACHINES[mid](), period, (width,), DelayModel(d))
    assert r.passed
    assert [p.width for p in r.runs[0].pulses] == [period // 2]


@settings(max_examples=25, deadline=None)
@given(st.data())
def test_quiescent_states_are_defined_codes(data):
    period = 2 * data.draw(st.integers(7, 30))
    width = data.draw(st.integers(2 * period, 10 * period))
    m = machine_section2()
    syn = synthesize(m.table, m.encoding)
    stim = demo_stimulus(m.table.input_vars, width, period)
    t = simulate(syn.netlist, stim, init={"y2": 0, "y1": 0, "y0": 0})
    defined = set(m.encoding.codes.values())
    for when, _, _ in stim.events():
        # just before each input event the machine is at rest in a named state
        assert t.state_code(when - 1) in defined
