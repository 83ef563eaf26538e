"""Flow-table synthesis and gate-level simulation of asynchronous sequential machines."""

from .flow import (
    Cycle,
    Diagnostic,
    ExcitationTable,
    FlowTable,
    RaceDiagnostic,
    Stable,
    StateEncoding,
    StateRow,
    Undefined,
    check_races,
    encode,
    settle,
    validate_flow_table,
)
from .boolmin import Cube, NorForm, Sop, TruthSpec, derive_equations, qm_minimize, to_nor_form
from .gatemap import Gate, Netlist, map_to_netlist, package_count
from .eventsim import DelayModel, SignalWave, Stimulus, Trace, make_clock, measure_pulses, simulate

__version__ = "0.1.0"
