"""Discrete-event simulation of a device network running one application tree.

The simulator owns a single time-ordered event queue (ordering is total:
time, then insertion sequence). Events are device firings (caused by timer
ticks, sensor changes, message arrivals, or message expiries), message
deliveries with stochastic latency, message expiries, and periodic
environment steps that integrate mobility, recompute the topology, and raise
the corresponding sensor triggers.

Everything a run does is a pure function of (initial configuration, seed):
all randomness flows through one seeded generator and all iteration orders
are fixed.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from .scheduling import (
    ConfigurationFault,
    ExportMessage,
    LocalStatusField,
    ProgramNode,
    _evaluate_tree,
    default_export,
    module_paths,
    validate_tree,
)
from .triggers import Trigger
from .values import ABSENT, DeviceId, NeighborField, euclidean, values_equal

Topology = Dict[DeviceId, Tuple[DeviceId, ...]]


@dataclass
class Environment:
    """Topology, per-device sensors, and positions: the world state."""

    topology: Topology
    sensor_field: Dict[DeviceId, Dict[str, object]]
    positions: Dict[DeviceId, Tuple[float, float]] = field(default_factory=dict)


def check_well_formed(env: Environment) -> bool:
    """Topology and sensor field share a domain; every neighbourhood contains
    the device itself and stays inside that domain."""
    if set(env.topology) != set(env.sensor_field):
        return False
    domain = set(env.sensor_field)
    for dev, row in env.topology.items():
        members = set(row)
        if dev not in members or not members <= domain:
            return False
    return True


def sample_latency(rng, mean: float) -> float:
    """One strictly positive delay draw with the given expected value.

    Inverse-CDF sampling of the unit-shape Weibull (scale = mean), i.e.
    ``mean * (-ln(1 - u))``; a zero draw is clamped to the smallest positive
    step.
    """
    if not mean > 0:
        raise ValueError(f"mean latency must be positive, got {mean!r}")
    u = rng.random()
    value = mean * -math.log1p(-u)
    return value if value > 0.0 else 1e-12


@dataclass(frozen=True)
class LatencyModel:
    mean: float

    def __post_init__(self):
        if not self.mean > 0:
            raise ValueError(f"mean latency must be positive, got {self.mean!r}")

    def sample(self, rng) -> float:
        return sample_latency(rng, self.mean)


# ---------------------------------------------------------------------------
# Mobility
# ---------------------------------------------------------------------------

LEVY = "levy"
OSCILLATE_X = "oscillate_x"
STILL = "still"

Arena = Tuple[float, float, float, float]  # x_min, x_max, y_min, y_max


@dataclass(frozen=True)
class MobilityState:
    mode: str
    x: float
    y: float
    speed: float
    heading: float = 0.0
    remaining_walk: float = 0.0
    arena: Arena = (0.0, 0.0, 0.0, 0.0)

    @property
    def position(self) -> Tuple[float, float]:
        return (self.x, self.y)


def pareto_length(rng, scale: float = 0.5) -> float:
    """Walk-length draw: inverse CDF ``scale / (1 - u)``, support [scale, inf)."""
    return scale / (1.0 - rng.random())


def levy_step(rng, state: MobilityState, arena: Optional[Arena] = None, dt: float = 0.1) -> MobilityState:
    """Advance a levy walker by one integration step.

    A new uniform heading and Pareto-distributed leg length are drawn when
    the current leg is exhausted or a boundary is hit; positions are clamped
    to the arena, so walkers never escape it.
    """
    if state.mode != LEVY:
        raise ValueError(f"levy_step applied to mode {state.mode!r}")
    if state.speed == 0.0:
        return state
    box = arena if arena is not None else state.arena
    heading, remaining = state.heading, state.remaining_walk
    if remaining <= 0.0:
        heading = rng.uniform(0.0, 2.0 * math.pi)
        remaining = pareto_length(rng)
    step = state.speed * dt
    x = state.x + math.cos(heading) * step
    y = state.y + math.sin(heading) * step
    remaining -= step
    hit = False
    if x < box[0]:
        x, hit = box[0], True
    elif x > box[1]:
        x, hit = box[1], True
    if y < box[2]:
        y, hit = box[2], True
    elif y > box[3]:
        y, hit = box[3], True
    if hit:
        heading = rng.uniform(0.0, 2.0 * math.pi)
        remaining = pareto_length(rng)
    return replace(state, x=x, y=y, heading=heading, remaining_walk=remaining)


def oscillate_step(state: MobilityState, arena: Optional[Arena] = None, dt: float = 0.1) -> MobilityState:
    """Advance a device sweeping back and forth along x; y stays fixed."""
    if state.mode != OSCILLATE_X:
        raise ValueError(f"oscillate_step applied to mode {state.mode!r}")
    if state.speed == 0.0:
        return state
    box = arena if arena is not None else state.arena
    x = state.x + math.cos(state.heading) * state.speed * dt
    heading = state.heading
    if x >= box[1]:
        x, heading = box[1], math.pi
    elif x <= box[0]:
        x, heading = box[0], 0.0
    return replace(state, x=x, heading=heading)


def recompute_topology(
    positions: Mapping[DeviceId, Tuple[float, float]], radius: float
) -> Topology:
    """Symmetric unit-disc connectivity (boundary inclusive), always reflexive."""
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius!r}")
    ids = sorted(positions)
    out: Topology = {}
    for dev in ids:
        p = positions[dev]
        row = tuple(
            other
            for other in ids
            if other == dev or euclidean(p, positions[other]) <= radius
        )
        out[dev] = row
    return out


# ---------------------------------------------------------------------------
# Network configuration and transitions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TickSource:
    """Timer trigger schedule for one device; period None means one-shot."""

    phase: float
    period: Optional[float]
    timer_id: str = "default"


class NetworkConfiguration:
    """Whole simulation state: environment, statuses, queue, clock, rng.

    One instance is strictly single-threaded; independent instances share
    nothing. Exported structures (value trees, export messages) are immutable
    and freely shared between statuses.
    """

    def __init__(
        self,
        env: Environment,
        trees: Dict[DeviceId, ProgramNode],
        *,
        rng,
        latency: LatencyModel,
        retention: Optional[float] = None,
        departure_retention: float = 5.0,
        received_sensor_modules: Sequence[str] = (),
        tick_plan: Optional[Dict[DeviceId, TickSource]] = None,
        mobility: Optional[Dict[DeviceId, MobilityState]] = None,
        env_step_period: float = 0.1,
        comm_radius: float = 7.5,
    ):
        if not check_well_formed(env):
            raise ConfigurationFault("initial environment is not well formed")
        if set(trees) != set(env.topology):
            raise ConfigurationFault("every device needs an application tree")
        first = next(iter(trees.values()), None)
        self.module_path: Dict[str, Tuple[int, ...]] = module_paths(first) if first else {}
        for dev, tree in trees.items():
            validate_tree(tree)
            if module_paths(tree) != self.module_path:
                raise ConfigurationFault(f"tree of device {dev} differs in shape")
        ordered = sorted(self.module_path.items(), key=lambda kv: kv[1])
        self.module_ids: Tuple[str, ...] = tuple(module_id for module_id, _ in ordered)
        self._module_index = {module_id: i for i, module_id in enumerate(self.module_ids)}
        sizes: List[int] = []

        def _measure(node: ProgramNode) -> int:
            index = len(sizes)
            sizes.append(0)
            total = 1
            for child in node.children:
                total += _measure(child)
            sizes[index] = total
            return total

        if first is not None:
            _measure(first)
        self._subtree_sizes: Tuple[int, ...] = tuple(sizes)
        self.env = env
        self.trees = trees
        self.rng = rng
        self.latency = latency
        self.retention = retention
        self.departure_retention = departure_retention
        self.received_sensor_modules = tuple(received_sensor_modules)
        self._received_set = frozenset(self.received_sensor_modules)
        self.tick_plan = dict(tick_plan or {})
        self.mobility = dict(mobility or {})
        self.env_step_period = env_step_period
        self.comm_radius = comm_radius
        self.default_message: Optional[ExportMessage] = default_export(first) if first else None
        self.status: Dict[DeviceId, LocalStatusField] = {
            dev: {peer: self.default_message for peer in row}
            for dev, row in env.topology.items()
        }
        self.round_counts: Dict[DeviceId, Dict[str, int]] = {dev: {} for dev in env.topology}
        self.deadlines: Dict[Tuple[DeviceId, DeviceId], float] = {}
        # High-water mark of installed send times per (receiver, sender):
        # only the most recent message from each neighbour is ever kept.
        self.sent_times: Dict[Tuple[DeviceId, DeviceId], float] = {}
        self.now = 0.0
        self._queue: List[tuple] = []
        self._seq = 0
        self._schedule_bootstrapped = False

    # -- event queue --------------------------------------------------------

    def schedule(self, time: float, kind: str, data: tuple) -> None:
        heapq.heappush(self._queue, (time, self._seq, kind, data))
        self._seq += 1

    def pending_events(self) -> int:
        return len(self._queue)

    # -- helpers ------------------------------------------------------------

    def _module_roots(self, message: Optional[ExportMessage]) -> List[object]:
        """Roots of every module subtree, in deterministic pre-order."""
        roots: List[object] = []

        def walk(msg: Optional[ExportMessage], arity_node: ExportMessage):
            roots.append(msg.tree.root if msg is not None else ABSENT)
            for i, child in enumerate(arity_node.children):
                walk(msg.children[i] if msg is not None else None, child)

        walk(message, self.default_message)
        return roots

    def _module_ids(self) -> Tuple[str, ...]:
        return self.module_ids

    def _message_events(
        self, old: Optional[ExportMessage], new: ExportMessage
    ) -> List[str]:
        """Modules whose delivered change is observable at the receiver.

        A changed module matters remotely when its value tree carries
        neighbour-readable nodes (nbr/share) or when the platform exposes its
        root through a received-values sensor; everything else is scheduler
        bookkeeping the receiver could never look at.
        """
        ids = self.module_ids
        sizes = self._subtree_sizes
        received = self._received_set
        changed: List[str] = []
        stack = [(old, new, 0)]
        while stack:
            old_msg, new_msg, index = stack.pop()
            old_tree = old_msg.tree if old_msg is not None else None
            new_tree = new_msg.tree
            if old_tree is not new_tree:
                # decide observability first: inert scheduler bookkeeping is
                # never worth a structural comparison
                if new_tree.exchanges or (old_tree is not None and old_tree.exchanges):
                    if old_tree is None or new_tree != old_tree:
                        changed.append(ids[index])
                elif ids[index] in received:
                    old_root = old_tree.root if old_tree is not None else ABSENT
                    if not values_equal(old_root, new_tree.root):
                        changed.append(ids[index])
            offset = index + 1
            for i, child in enumerate(new_msg.children):
                stack.append((old_msg.children[i] if old_msg is not None else None, child, offset))
                offset += sizes[offset]
        changed.sort(key=self._module_index.__getitem__)
        return changed


def fire(config: NetworkConfiguration, device: DeviceId, trigger: Trigger) -> None:
    """One round at ``device``: evaluate the tree, install the export locally,
    and enqueue one latency-delayed delivery per neighbour.

    A delivery, once executed, installs the export into the receiver's status
    and raises MESSAGE_RECEIVED for each module whose subtree changed in a
    way the receiver can observe (see ``_message_events``). When message
    retention is disabled and the new export equals the previous one, the
    inert broadcast is elided.
    """
    env = config.env
    if device not in env.topology:
        raise ConfigurationFault(f"unknown device {device}")
    status = config.status[device]

    sensors: Dict[str, object] = dict(env.sensor_field[device])
    sensors["time"] = config.now
    sensors["trigger"] = trigger
    for module_id in config.received_sensor_modules:
        path = config.module_path[module_id]
        entries = {}
        for sender, message in status.items():
            if sender == device:
                continue
            root = message.subtree(path).tree.root
            if root is not ABSENT:
                entries[sender] = root
        sensors["received:" + module_id] = NeighborField(entries)

    executed: List[str] = []
    export, changed = _evaluate_tree(device, config.trees[device], status, sensors, executed)
    counts = config.round_counts[device]
    for module_id in executed:
        counts[module_id] = counts.get(module_id, 0) + 1

    if config.retention is None and not changed and status.get(device) is not None:
        return  # nothing new to say and no deadline to refresh
    status[device] = export
    for peer in env.topology[device]:
        if peer == device:
            continue
        delay = config.latency.sample(config.rng)
        config.schedule(config.now + delay, "deliver", (peer, device, export, config.now))


def _handle_delivery(
    config: NetworkConfiguration,
    receiver: DeviceId,
    sender: DeviceId,
    export: ExportMessage,
    sent_at: float,
) -> None:
    env = config.env
    if receiver not in env.topology or sender not in env.topology[receiver]:
        return  # sender left the neighbourhood while the message was in flight
    key = (receiver, sender)
    if sent_at < config.sent_times.get(key, -math.inf):
        return  # overtaken by a more recent message: keep only the newest
    config.sent_times[key] = sent_at
    status = config.status[receiver]
    old = status.get(sender)
    status[sender] = export
    if config.retention is not None:
        deadline = config.now + config.retention
        config.deadlines[key] = deadline
        config.schedule(deadline, "timeout", (receiver, sender, deadline))
    else:
        config.deadlines.pop(key, None)
    for module_id in config._message_events(old, export):
        fire(config, receiver, Trigger.message_received(module_id, sender))


def expire_messages(config: NetworkConfiguration, device: DeviceId, sender: DeviceId) -> None:
    """Forget a sender whose message outlived its welcome.

    The held entry reverts to the default message (or disappears entirely if
    the sender is no longer a neighbour) and the holder fires one
    MESSAGE_TIMEOUT per module subtree that carried a value.
    """
    config.deadlines.pop((device, sender), None)
    if device not in config.env.topology:
        return
    status = config.status.get(device)
    entry = status.get(sender) if status is not None else None
    if entry is None:
        return
    retained = [
        module_id
        for module_id, root in zip(config._module_ids(), config._module_roots(entry))
        if root is not ABSENT
    ]
    if sender in config.env.topology[device]:
        status[sender] = config.default_message
    else:
        del status[sender]
    for module_id in retained:
        fire(config, device, Trigger.message_timeout(module_id, sender))


def _handle_timeout(
    config: NetworkConfiguration, receiver: DeviceId, sender: DeviceId, deadline: float
) -> None:
    if config.deadlines.get((receiver, sender)) != deadline:
        return  # refreshed by a newer delivery: this expiry is superseded
    expire_messages(config, receiver, sender)


def apply_environment_change(config: NetworkConfiguration, new_env: Environment) -> None:
    """Install a new (well-formed) environment and reconcile statuses.

    Devices keep the entries of surviving neighbours, gain default entries
    for new ones, and schedule expiries for departed ones; every device whose
    neighbourhood set changed immediately fires with a SENSOR("neighbours")
    trigger.
    """
    if not check_well_formed(new_env):
        raise ConfigurationFault("environment change rejected: not well formed")
    for dev in new_env.topology:
        if dev not in config.trees:
            raise ConfigurationFault(f"device {dev} has no application tree")

    old_env = config.env
    changed_neighbourhoods: List[DeviceId] = []
    new_status: Dict[DeviceId, LocalStatusField] = {}
    for dev in sorted(new_env.topology):
        old_row = set(old_env.topology.get(dev, ()))
        new_row = set(new_env.topology[dev])
        if new_row != old_row:
            changed_neighbourhoods.append(dev)
        old_entries = config.status.get(dev, {})
        for departed in sorted(old_row - new_row):
            if departed in old_entries:
                deadline = config.now + config.departure_retention
                config.deadlines[(dev, departed)] = deadline
                config.schedule(deadline, "timeout", (dev, departed, deadline))
        entries: LocalStatusField = {}
        for peer in new_env.topology[dev]:
            entries[peer] = old_entries.get(peer, config.default_message)
        for peer, message in old_entries.items():
            if peer not in entries and (dev, peer) in config.deadlines:
                entries[peer] = message  # retained until its expiry fires
        new_status[dev] = entries

    removed = set(old_env.topology) - set(new_env.topology)
    for dev in removed:
        config.round_counts.setdefault(dev, {})
        config.mobility.pop(dev, None)
        config.tick_plan.pop(dev, None)
    for key in [k for k in config.deadlines if k[0] in removed]:
        del config.deadlines[key]
    for key in [k for k in config.sent_times if k[0] in removed or k[1] in removed]:
        del config.sent_times[key]
    for dev in new_env.topology:
        config.round_counts.setdefault(dev, {})

    config.env = new_env
    config.status = new_status
    for dev in changed_neighbourhoods:
        fire(config, dev, Trigger.sensor("neighbours"))


def neighbours_sensor_value(row: Sequence[DeviceId], dev: DeviceId) -> Tuple[DeviceId, ...]:
    return tuple(d for d in row if d != dev)


def nbr_range_field(
    positions: Mapping[DeviceId, Tuple[float, float]], row: Sequence[DeviceId], dev: DeviceId
) -> NeighborField:
    p = positions[dev]
    return NeighborField({d: euclidean(p, positions[d]) for d in row if d != dev})


def _environment_step(config: NetworkConfiguration) -> None:
    """Integrate mobility, refresh topology and derived sensors, raise triggers.

    Trigger order is fixed: neighbourhood changes (inside the environment
    change), then position changes, then range changes, each in ascending
    device order.
    """
    moved: List[DeviceId] = []
    for dev in sorted(config.mobility):
        state = config.mobility[dev]
        if state.mode == LEVY:
            new_state = levy_step(config.rng, state, dt=config.env_step_period)
        elif state.mode == OSCILLATE_X:
            new_state = oscillate_step(state, dt=config.env_step_period)
        else:
            continue
        if new_state.position != state.position:
            moved.append(dev)
        config.mobility[dev] = new_state
    if not moved:
        return

    old_env = config.env
    positions = dict(old_env.positions)
    for dev in moved:
        positions[dev] = config.mobility[dev].position

    n = len(positions)
    if len(moved) * 8 <= n:
        topology = dict(old_env.topology)
        moved_set = set(moved)
        ids = sorted(positions)
        for dev in moved:
            p = positions[dev]
            topology[dev] = tuple(
                other
                for other in ids
                if other == dev or euclidean(p, positions[other]) <= config.comm_radius
            )
        for other in ids:
            if other in moved_set:
                continue
            row = topology[other]
            p = positions[other]
            linked = {d for d in moved_set if d != other and euclidean(p, positions[d]) <= config.comm_radius}
            present = {d for d in row if d in moved_set}
            if linked != present:
                kept = [d for d in row if d not in moved_set]
                topology[other] = tuple(sorted(kept + list(linked)))
    else:
        topology = recompute_topology(positions, config.comm_radius)

    affected = set(moved)
    for dev in moved:
        affected.update(d for d in old_env.topology.get(dev, ()) if d != dev)
        affected.update(d for d in topology.get(dev, ()) if d != dev)

    sensor_field = dict(old_env.sensor_field)
    range_changed: List[DeviceId] = []
    for dev in sorted(affected):
        updates: Dict[str, object] = {}
        if dev in moved:
            updates["position"] = positions[dev]
        new_range = nbr_range_field(positions, topology[dev], dev)
        if new_range != sensor_field[dev].get("nbr_range"):
            updates["nbr_range"] = new_range
            range_changed.append(dev)
        row_sensor = neighbours_sensor_value(topology[dev], dev)
        if row_sensor != sensor_field[dev].get("neighbours"):
            updates["neighbours"] = row_sensor
        if updates:
            sensors = dict(sensor_field[dev])
            sensors.update(updates)
            sensor_field[dev] = sensors

    apply_environment_change(config, Environment(topology, sensor_field, positions))
    for dev in moved:
        fire(config, dev, Trigger.sensor("position"))
    for dev in range_changed:
        if dev not in moved:
            fire(config, dev, Trigger.sensor("nbr_range"))


Sampler = Callable[[NetworkConfiguration, float], object]


def run(
    config: NetworkConfiguration,
    t_end: float,
    *,
    sampler: Optional[Sampler] = None,
    sample_period: float = 1.0,
) -> List[object]:
    """Drive the event queue until ``t_end`` and return collected samples.

    Events with equal timestamps execute in insertion order. The optional
    sampler is invoked on a fixed cadence (first at time 0) and whatever it
    returns, when not None, is appended to the trace.
    """
    if not t_end > 0:
        raise ValueError(f"t_end must be positive, got {t_end!r}")
    if not config._schedule_bootstrapped:
        config._schedule_bootstrapped = True
        if sampler is not None:
            config.schedule(0.0, "sample", (0,))
        if config.mobility:
            config.schedule(config.env_step_period, "envstep", (1,))
        for dev in sorted(config.tick_plan):
            config.schedule(config.tick_plan[dev].phase, "tick", (dev, 0))

    trace: List[object] = []
    queue = config._queue
    while queue:
        if queue[0][0] > t_end:
            break  # leave future events queued: runs may be staged
        time, _seq, kind, data = heapq.heappop(queue)
        config.now = time
        if kind == "deliver":
            _handle_delivery(config, *data)
        elif kind == "tick":
            dev, k = data
            source = config.tick_plan.get(dev)
            if source is None:
                continue
            if dev in config.env.topology:
                fire(config, dev, Trigger.tick(source.timer_id))
            if source.period is not None:
                config.schedule(source.phase + (k + 1) * source.period, "tick", (dev, k + 1))
        elif kind == "timeout":
            _handle_timeout(config, *data)
        elif kind == "envstep":
            (k,) = data
            _environment_step(config)
            config.schedule((k + 1) * config.env_step_period, "envstep", (k + 1,))
        elif kind == "sample":
            (k,) = data
            if sampler is not None:
                row = sampler(config, time)
                if row is not None:
                    trace.append(row)
            config.schedule((k + 1) * sample_period, "sample", (k + 1,))
    config.now = t_end
    return trace
