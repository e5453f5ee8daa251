"""Field-based coordination with programmable, causality-driven scheduling.

The package layers up from a single-round field-program evaluator
(:mod:`fieldsched.calculus`), through guarded application trees
(:mod:`fieldsched.scheduling`), to a deterministic discrete-event network
simulator (:mod:`fieldsched.netsim`), reusable coordination blocks
(:mod:`fieldsched.blocks`), and the experiment scenarios plus sweep runner
(:mod:`fieldsched.experiments`, :mod:`fieldsched.cli`).
"""

from .blocks import (
    broadcast,
    channel,
    distance_between,
    distance_to,
    is_signal_stable,
    range_metric,
)
from .calculus import (
    EvaluationFault,
    FieldProgram,
    RoundContext,
    SensorNotFound,
    Tag,
    ValueTree,
    branch,
    evaluate_round,
    fold_hood,
    nbr,
    rep,
    share,
)
from .experiments import (
    MetricsCollector,
    MetricsRow,
    OracleSnapshot,
    ScenarioSpec,
    build_scenario,
    oracle_channel,
    oracle_distance_field,
    run_scenario,
    write_trace,
)
from .netsim import (
    Environment,
    LatencyModel,
    MobilityState,
    NetworkConfiguration,
    TickSource,
    apply_environment_change,
    check_well_formed,
    expire_messages,
    fire,
    levy_step,
    oscillate_step,
    recompute_topology,
    run,
    sample_latency,
)
from .scheduling import (
    ConfigurationFault,
    ExportMessage,
    ProgramNode,
    SchedulerInputs,
    SchedulingPredicate,
    always_guard,
    any_child_true_guard,
    assemble_inputs,
    changed_filtered_guard,
    default_export,
    evaluate_program_tree,
    first_run_or,
    reactive_guard,
    sensor_changed_guard,
    timer_guard,
    validate_tree,
)
from .triggers import Trigger, TriggerPattern
from .values import ABSENT, DeviceId, NeighborField, values_equal

__version__ = "0.1.0"
