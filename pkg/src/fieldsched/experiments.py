"""Scenario construction, oracle references, metric collection, CSV traces.

Three scenarios are supported:

* ``gradient``: an irregular grid of still devices plus one device sweeping
  left-right above the top row; the sweeper and the bottom-left corner
  device are distance sources.
* ``moving``: the whole grid performs constrained random walks around one
  walking source.
* ``channel``: a double-width grid; the left half walks inside its own
  arena, the right half is still, and the network maintains the corridor
  between the two half-centre devices.

Each scenario runs either with the reactive (``time_fluid``) application
tree or the ``classic`` variant, which is the same tree with every guard
replaced by an unsynchronised 1 Hz timer.
"""

from __future__ import annotations

import heapq
import math
import os
import random
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .blocks import distance_between, distance_to
from .calculus import RoundContext, rep
from .netsim import (
    LEVY,
    OSCILLATE_X,
    Environment,
    LatencyModel,
    MobilityState,
    NetworkConfiguration,
    TickSource,
    nbr_range_field,
    neighbours_sensor_value,
    recompute_topology,
    run,
)
from .scheduling import (
    ProgramNode,
    SchedulerInputs,
    always_guard,
    any_child_true_guard,
    timer_guard,
)
from .triggers import Trigger, TriggerPattern
from .values import ABSENT, DeviceId, euclidean, values_equal

GRADIENT = "gradient"
MOVING = "moving"
CHANNEL = "channel"
SCENARIOS = (GRADIENT, MOVING, CHANNEL)

CLASSIC = "classic"
TIME_FLUID = "time_fluid"
ALGORITHMS = (CLASSIC, TIME_FLUID)

GRID_SPACING = 5.0
JITTER_RADIUS = 2.0
COMM_RADIUS = 7.5
CLASSIC_PERIOD = 1.0

CSV_HEADER = (
    "time,scenario,algorithm,epsilon,lambda_inv,speed,seed,"
    "mean_error,mean_rounds,stdev_rounds,efficiency"
)


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str
    speed: float
    epsilon: float
    mean_latency: float
    algorithm: str
    seed: int
    duration: float
    grid: int = 11
    channel_width: float = 5.0

    def __post_init__(self):
        if self.kind not in SCENARIOS:
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.speed < 0 or self.epsilon < 0 or self.channel_width < 0:
            raise ValueError("speed, epsilon and channel width must be non-negative")
        if not self.mean_latency > 0:
            raise ValueError(f"mean latency must be positive, got {self.mean_latency!r}")
        if not self.duration > 0 or self.grid < 2:
            raise ValueError("duration must be positive and grid at least 2")


@dataclass
class ScenarioInfo:
    """Metadata the metrics layer needs about a built scenario."""

    spec: ScenarioSpec
    root_module: str
    error_cap: float
    endpoints: Tuple[DeviceId, ...] = ()


@dataclass(frozen=True)
class MetricsRow:
    time: float
    mean_error: float
    mean_rounds: float
    stdev_rounds: float
    efficiency: float


@dataclass(frozen=True)
class OracleSnapshot:
    distances: Dict[DeviceId, float]
    membership: Optional[Dict[DeviceId, bool]] = None


# ---------------------------------------------------------------------------
# Leaf scheduler programs (the guard-policy layer of the application trees)
# ---------------------------------------------------------------------------


def position_change_program(epsilon: float):
    """True when the device moved at least epsilon from the position that
    last produced True (the first evaluation always reports movement)."""

    def program(ctx: RoundContext) -> bool:
        pos = ctx.sensor("position")

        def update(state):
            reference, _ = state
            if reference is ABSENT:
                return (pos, True)
            if euclidean(pos, reference) >= epsilon:
                return (pos, True)
            return (reference, False)

        return rep(ctx, lambda: (ABSENT, False), update)[1]

    return program


def neighbourhood_change_program():
    """True when the neighbour set differs from the one that last produced True."""

    def program(ctx: RoundContext) -> bool:
        row = ctx.sensor("neighbours")

        def update(state):
            reference, _ = state
            if reference is ABSENT or row != reference:
                return (row, True)
            return (reference, False)

        return rep(ctx, lambda: (ABSENT, False), update)[1]

    return program


def value_change_program(module_id: str, epsilon: float):
    """True when the best neighbour-derived estimate for ``module_id`` drifted
    at least epsilon from the device's own current output of that module.

    Stateless: the device's own output moves only when the module re-runs,
    which is exactly the hysteresis the tolerance asks for.
    """
    received_name = "received:" + module_id
    own_name = "module:" + module_id

    def program(ctx: RoundContext) -> bool:
        own = ctx.sensor(own_name)
        if own is ABSENT:
            return True
        received = ctx.sensor(received_name)
        ranges = ctx.sensor("nbr_range")
        best = math.inf
        for dev, root in received.items():
            edge = ranges.get(dev)
            if edge is None:
                continue
            candidate = root + edge
            if candidate < best:
                best = candidate
        own_value = float(own)
        if math.isinf(best) and math.isinf(own_value):
            delta = 0.0
        else:
            delta = abs(best - own_value)
        return delta >= epsilon

    return program


def changed_program(sensor_name: str):
    """True when the named sensor differs from the last observed value."""

    def program(ctx: RoundContext) -> bool:
        current = ctx.sensor(sensor_name)

        def update(state):
            previous, _ = state
            if current is ABSENT:
                return (previous, False)
            if previous is ABSENT or not values_equal(current, previous):
                return (current, True)
            return (previous, False)

        return rep(ctx, lambda: (ABSENT, False), update)[1]

    return program


# ---------------------------------------------------------------------------
# Application trees
# ---------------------------------------------------------------------------


def _gradient_program(source_sensor: str):
    def program(ctx: RoundContext) -> float:
        return distance_to(ctx, bool(ctx.sensor(source_sensor)))

    return program


def _distance_between_program():
    def program(ctx: RoundContext) -> float:
        return distance_between(
            ctx, bool(ctx.sensor("source_a")), bool(ctx.sensor("source_b"))
        )

    return program


def _channel_predicate_program(width: float):
    def program(ctx: RoundContext) -> bool:
        to_a = ctx.sensor("module:gradient_a")
        to_b = ctx.sensor("module:gradient_b")
        across = ctx.sensor("module:distance_between")
        if to_a is ABSENT or to_b is ABSENT or across is ABSENT:
            return False
        return to_a + to_b <= across + width

    return program


def _guard(algorithm: str, reactive_factory):
    if algorithm == CLASSIC:
        return timer_guard(CLASSIC_PERIOD)
    return reactive_factory()


def _leaf_nodes(prefix: str, module_id: str, epsilon: float, algorithm: str):
    return (
        ProgramNode(
            prefix + "position",
            position_change_program(epsilon),
            _guard(algorithm, always_guard),
        ),
        ProgramNode(
            prefix + "neighbourhood",
            neighbourhood_change_program(),
            _guard(algorithm, always_guard),
        ),
        ProgramNode(
            prefix + "value_change",
            value_change_program(module_id, epsilon),
            _guard(algorithm, always_guard),
        ),
    )


def make_gradient_tree(spec: ScenarioSpec, source_sensor: str = "source") -> ProgramNode:
    """gradient <- (position moved >= eps | neighbourhood changed | neighbour
    estimate drifted >= eps); the classic variant times everything at 1 Hz."""
    leaves = _leaf_nodes("", "gradient", spec.epsilon, spec.algorithm)
    return ProgramNode(
        "gradient",
        _gradient_program(source_sensor),
        _guard(spec.algorithm, any_child_true_guard),
        leaves,
    )


def _own_message_guard(module_id: str):
    patterns = (
        TriggerPattern.message_received(module_id),
        TriggerPattern.message_timeout(module_id),
    )

    def factory():
        def guard(inputs: SchedulerInputs, sensors) -> bool:
            for name in ("module:changed_a", "module:changed_b"):
                flag = sensors.get(name)
                if flag is not ABSENT and flag:
                    return True
            trigger = inputs.trigger
            return isinstance(trigger, Trigger) and any(p.matches(trigger) for p in patterns)

        return guard

    return factory


def _channel_root_guard_factory():
    def guard(inputs: SchedulerInputs, sensors) -> bool:
        changed_a, changed_b, _ = inputs.child_roots
        if changed_a or changed_b:
            return True
        return inputs.child_changed[2]

    return guard


def make_channel_tree(spec: ScenarioSpec) -> ProgramNode:
    """Two gated gradients feed change detectors; those gate the endpoint
    distance block; the corridor predicate re-runs on any of the three."""

    def gradient_branch(tag: str) -> ProgramNode:
        module = "gradient_" + tag
        leaves = _leaf_nodes(tag + "_", module, spec.epsilon, spec.algorithm)
        grad = ProgramNode(
            module,
            _gradient_program("source_" + tag),
            _guard(spec.algorithm, any_child_true_guard),
            leaves,
        )
        return ProgramNode(
            "changed_" + tag,
            changed_program("module:" + module),
            _guard(spec.algorithm, always_guard),
            (grad,),
        )

    between = ProgramNode(
        "distance_between",
        _distance_between_program(),
        _guard(spec.algorithm, _own_message_guard("distance_between")),
    )
    return ProgramNode(
        "channel",
        _channel_predicate_program(spec.channel_width),
        _guard(spec.algorithm, _channel_root_guard_factory),
        (gradient_branch("a"), gradient_branch("b"), between),
    )


# ---------------------------------------------------------------------------
# Scenario construction
# ---------------------------------------------------------------------------


def _jittered(rng, nominal: Tuple[float, float]) -> Tuple[float, float]:
    radius = JITTER_RADIUS * math.sqrt(rng.random())
    angle = rng.uniform(0.0, 2.0 * math.pi)
    return (nominal[0] + radius * math.cos(angle), nominal[1] + radius * math.sin(angle))


def _grid_positions(rng, columns: int, rows: int) -> Dict[DeviceId, Tuple[float, float]]:
    positions = {}
    for row in range(rows):
        for col in range(columns):
            dev = row * columns + col
            positions[dev] = _jittered(rng, (col * GRID_SPACING, row * GRID_SPACING))
    return positions


def _nearest(positions, candidates, point) -> DeviceId:
    return min(candidates, key=lambda dev: (euclidean(positions[dev], point), dev))


def build_scenario(spec: ScenarioSpec) -> NetworkConfiguration:
    """Instantiate the initial network configuration for one run.

    Placement, phases, and every later stochastic draw all flow from one
    generator seeded with the run seed, so a (spec, seed) pair pins the
    whole trajectory.
    """
    rng = random.Random(spec.seed)
    mobility: Dict[DeviceId, MobilityState] = {}
    source_flags: Dict[str, Dict[DeviceId, bool]] = {}
    endpoints: Tuple[DeviceId, ...] = ()

    if spec.kind == GRADIENT:
        n = spec.grid
        positions = _grid_positions(rng, n, n)
        top = (n - 1) * GRID_SPACING
        mobile = n * n
        mobile_y = top + GRID_SPACING
        positions[mobile] = (0.0, mobile_y)
        mobility[mobile] = MobilityState(
            OSCILLATE_X, 0.0, mobile_y, spec.speed, arena=(0.0, top, mobile_y, mobile_y)
        )
        source_flags["source"] = {dev: dev in (0, mobile) for dev in positions}
        root_module = "gradient"
        tree_factory = lambda: make_gradient_tree(spec)
        received = ("gradient",)
        cap = math.hypot(top, mobile_y)
    elif spec.kind == MOVING:
        n = spec.grid
        positions = _grid_positions(rng, n, n)
        top = (n - 1) * GRID_SPACING
        arena = (0.0, top, 0.0, top)
        centre = n * n
        positions[centre] = (top / 2.0, top / 2.0)
        for dev in sorted(positions):
            mobility[dev] = MobilityState(
                LEVY, positions[dev][0], positions[dev][1], spec.speed, arena=arena
            )
        source_flags["source"] = {dev: dev == centre for dev in positions}
        root_module = "gradient"
        tree_factory = lambda: make_gradient_tree(spec)
        received = ("gradient",)
        cap = math.hypot(top, top)
    else:  # CHANNEL
        rows = spec.grid
        columns = 2 * spec.grid
        positions = _grid_positions(rng, columns, rows)
        width = (columns - 1) * GRID_SPACING
        height = (rows - 1) * GRID_SPACING
        half = width / 2.0
        left_arena = (0.0, half, 0.0, height)
        for row in range(rows):
            for col in range(columns):
                dev = row * columns + col
                if col * GRID_SPACING < half:
                    x, y = positions[dev]
                    mobility[dev] = MobilityState(LEVY, x, y, spec.speed, arena=left_arena)
        left = [d for d in positions if mobility.get(d) is not None]
        right = [d for d in positions if d not in mobility]
        end_a = _nearest(positions, left, (width / 4.0, height / 2.0))
        end_b = _nearest(positions, right, (3.0 * width / 4.0, height / 2.0))
        endpoints = (end_a, end_b)
        source_flags["source_a"] = {dev: dev == end_a for dev in positions}
        source_flags["source_b"] = {dev: dev == end_b for dev in positions}
        root_module = "channel"
        tree_factory = lambda: make_channel_tree(spec)
        received = ("gradient_a", "gradient_b")
        cap = math.hypot(width, height)

    topology = recompute_topology(positions, COMM_RADIUS)
    sensor_field: Dict[DeviceId, Dict[str, object]] = {}
    for dev in sorted(positions):
        sensors: Dict[str, object] = {
            "position": positions[dev],
            "neighbours": neighbours_sensor_value(topology[dev], dev),
            "nbr_range": nbr_range_field(positions, topology[dev], dev),
        }
        for name, flags in source_flags.items():
            sensors[name] = flags[dev]
        sensor_field[dev] = sensors

    tick_plan: Dict[DeviceId, TickSource] = {}
    for dev in sorted(positions):
        phase = rng.uniform(0.0, 1.0)
        if spec.algorithm == CLASSIC:
            tick_plan[dev] = TickSource(phase, CLASSIC_PERIOD)
        else:
            tick_plan[dev] = TickSource(phase, None, timer_id="boot")

    config = NetworkConfiguration(
        Environment(topology, sensor_field, positions),
        {dev: tree_factory() for dev in sorted(positions)},
        rng=rng,
        latency=LatencyModel(spec.mean_latency),
        retention=None,
        received_sensor_modules=received,
        tick_plan=tick_plan,
        mobility=mobility,
        comm_radius=COMM_RADIUS,
    )
    config.info = ScenarioInfo(spec, root_module, cap, endpoints)
    return config


# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------


def oracle_distance_field(env: Environment, sources: Sequence[DeviceId]) -> Dict[DeviceId, float]:
    """Shortest-path distances (Dijkstra, Euclidean edge weights) over the
    instantaneous communication graph; unreachable devices get infinity."""
    distances = {dev: math.inf for dev in env.topology}
    heap = []
    for dev in sorted(sources):
        distances[dev] = 0.0
        heapq.heappush(heap, (0.0, dev))
    while heap:
        d, dev = heapq.heappop(heap)
        if d > distances[dev]:
            continue
        p = env.positions[dev]
        for peer in env.topology[dev]:
            if peer == dev:
                continue
            candidate = d + euclidean(p, env.positions[peer])
            if candidate < distances[peer]:
                distances[peer] = candidate
                heapq.heappush(heap, (candidate, peer))
    return distances


def oracle_channel(
    env: Environment, a: DeviceId, b: DeviceId, width: float
) -> Dict[DeviceId, bool]:
    """Corridor membership computed from oracle distances with the same
    predicate the running algorithm uses."""
    to_a = oracle_distance_field(env, [a])
    to_b = oracle_distance_field(env, [b])
    across = to_a[b]
    return {dev: to_a[dev] + to_b[dev] <= across + width for dev in env.topology}


def oracle_snapshot(config: NetworkConfiguration) -> OracleSnapshot:
    info: ScenarioInfo = config.info
    if info.spec.kind == CHANNEL:
        a, b = info.endpoints
        distances = oracle_distance_field(config.env, [a, b])
        membership = oracle_channel(config.env, a, b, info.spec.channel_width)
        return OracleSnapshot(distances, membership)
    sources = [
        dev
        for dev in sorted(config.env.topology)
        if config.env.sensor_field[dev].get("source")
    ]
    return OracleSnapshot(oracle_distance_field(config.env, sources))


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


def _population_stdev(values: Sequence[float]) -> float:
    n = len(values)
    if n == 0:
        return 0.0
    mean = sum(values) / n
    return math.sqrt(sum((v - mean) ** 2 for v in values) / n)


class MetricsCollector:
    """Samples one metrics row per call, accumulating the error integral.

    Oracle values are recomputed from the instantaneous environment at each
    sample and never read algorithm state.
    """

    def __init__(self, config: NetworkConfiguration):
        self.info: ScenarioInfo = config.info
        self.root_path = config.module_path[self.info.root_module]
        self._integral = 0.0
        self._previous: Optional[Tuple[float, float]] = None

    def _computed_root(self, config: NetworkConfiguration, dev: DeviceId):
        message = config.status[dev].get(dev)
        if message is None:
            return ABSENT
        return message.subtree(self.root_path).tree.root

    def sample(self, config: NetworkConfiguration, now: float) -> MetricsRow:
        snapshot = oracle_snapshot(config)
        devices = sorted(config.env.topology)
        errors: List[float] = []
        if self.info.spec.kind == CHANNEL:
            for dev in devices:
                computed = self._computed_root(config, dev)
                member = bool(computed) if computed is not ABSENT else False
                errors.append(0.0 if member == snapshot.membership[dev] else 1.0)
        else:
            cap = self.info.error_cap
            for dev in devices:
                computed = self._computed_root(config, dev)
                value = math.inf if computed is ABSENT else float(computed)
                truth = snapshot.distances[dev]
                if math.isinf(value) and math.isinf(truth):
                    errors.append(0.0)
                elif math.isinf(value) or math.isinf(truth):
                    errors.append(cap)
                else:
                    errors.append(abs(value - truth))
        mean_error = sum(errors) / len(errors)

        counts = [
            float(config.round_counts[dev].get(self.info.root_module, 0)) for dev in devices
        ]
        mean_rounds = sum(counts) / len(counts)
        stdev_rounds = _population_stdev(counts)

        if self._previous is not None:
            t0, e0 = self._previous
            self._integral += 0.5 * (e0 + mean_error) * (now - t0)
        self._previous = (now, mean_error)
        return MetricsRow(now, mean_error, mean_rounds, stdev_rounds, self._integral * mean_rounds)


def run_scenario(spec: ScenarioSpec) -> List[MetricsRow]:
    """Build and run one scenario to completion, sampling metrics at 1 Hz."""
    config = build_scenario(spec)
    collector = MetricsCollector(config)
    return run(config, spec.duration, sampler=collector.sample)


# ---------------------------------------------------------------------------
# Trace output
# ---------------------------------------------------------------------------


def format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def trace_lines(rows: Sequence[MetricsRow], spec: ScenarioSpec) -> List[str]:
    lines = [CSV_HEADER]
    for row in rows:
        lines.append(
            ",".join(
                format_value(v)
                for v in (
                    row.time,
                    spec.kind,
                    spec.algorithm,
                    spec.epsilon,
                    spec.mean_latency,
                    spec.speed,
                    spec.seed,
                    row.mean_error,
                    row.mean_rounds,
                    row.stdev_rounds,
                    row.efficiency,
                )
            )
        )
    return lines


def write_trace(rows: Sequence[MetricsRow], spec: ScenarioSpec, path: str) -> str:
    """Write one run's rows as CSV, atomically (write-then-replace)."""
    payload = "\n".join(trace_lines(rows, spec)) + "\n"
    tmp_path = path + ".tmp"
    try:
        with open(tmp_path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(payload)
        os.replace(tmp_path, path)
    except OSError as exc:
        raise OSError(f"failed writing trace to {path!r}: {exc}") from exc
    return path
