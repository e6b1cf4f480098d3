"""rrpm: opportunistic store-and-forward simulation for rural patient monitoring.

A discrete-time simulator of a small community where patient health reports
hop device-to-device over short-range radio until they reach a clinic
destination.  See the README for the model and the demos/ directory for
worked examples.
"""

from rrpm.model import (
    CardinalityViolation,
    ClassGroup,
    DegenerateRow,
    Grid,
    Message,
    MissingKey,
    MobilityState,
    NodeClass,
    OutOfRange,
    PeriodSchedule,
    Position,
    ScenarioError,
    ScenarioSpec,
    TransitionTable,
    default_tables,
    load_scenario,
    normalize_transition_table,
    period_of,
    validate_scenario,
)
from rrpm.mobility import LocationAssignment, MobileNode, Placement, Roster
from rrpm.network import (
    ContactEvent,
    InvalidRadioParams,
    MessageStore,
    RadioProfile,
    detect_contacts,
    exchange,
    expire,
    sample_ranges,
)
from rrpm.metrics import (
    AggregateResult,
    EmptyMessageSet,
    InsufficientSeeds,
    MixedScenarios,
    NoDeliveries,
    RunResult,
    aggregate,
    delivery_probability,
    max_latency,
)
from rrpm.harness import (
    Simulation,
    SweepSpec,
    SweepTable,
    emit_results,
    read_sweep_csv,
    run_simulation,
    run_sweep,
    synthesize_population,
)

__version__ = "0.1.0"

__all__ = [
    "AggregateResult", "CardinalityViolation", "ClassGroup", "ContactEvent",
    "DegenerateRow", "EmptyMessageSet", "Grid", "InsufficientSeeds",
    "InvalidRadioParams", "LocationAssignment", "Message", "MessageStore",
    "MissingKey", "MixedScenarios", "MobileNode", "MobilityState",
    "NoDeliveries", "NodeClass", "OutOfRange", "PeriodSchedule", "Placement",
    "Position", "RadioProfile", "Roster", "RunResult", "ScenarioError",
    "ScenarioSpec", "Simulation", "SweepSpec", "SweepTable",
    "TransitionTable", "aggregate", "default_tables", "delivery_probability",
    "detect_contacts", "emit_results", "exchange", "expire", "load_scenario",
    "max_latency", "normalize_transition_table", "period_of",
    "read_sweep_csv", "run_simulation", "run_sweep", "sample_ranges",
    "synthesize_population", "validate_scenario",
]
