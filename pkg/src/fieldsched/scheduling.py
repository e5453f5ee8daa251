"""Guarded program trees: decide per node whether to re-evaluate or reuse.

An application is a tree of named program nodes. Children act as schedulers
for their parent: on every firing the whole tree is walked post-order, each
node's guard is consulted (guards are free: they never communicate and do
not count as executions), and only nodes whose guard answers True actually
re-run their program. A skipped node's previous value tree is reused
verbatim in the outgoing export.

Data flows upward through guard inputs (fresh child roots) and, more
generally, through read-only ``module:<id>`` sensors that expose each
module's latest root to every node evaluated after it in the walk.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from .calculus import (
    FieldProgram,
    RoundContext,
    Tag,
    ValueTree,
    evaluate_round,
    rep,
)
from .triggers import Trigger, TriggerPattern
from .values import ABSENT, DeviceId, values_equal


class ConfigurationFault(Exception):
    """Raised when statuses, trees, or environments are structurally invalid."""


class SchedulerInputs:
    """What a guard sees: the trigger, its own previous output, child outputs.

    ``child_changed[i]`` is True iff child i's root differs (structural value
    equality) from its root at this node's previous guard evaluation. Roots
    that have never been produced appear as None.
    """

    __slots__ = ("trigger", "prev_self_root", "child_roots", "child_changed")

    def __init__(self, trigger, prev_self_root, child_roots, child_changed):
        self.trigger = trigger
        self.prev_self_root = prev_self_root
        self.child_roots = tuple(child_roots)
        self.child_changed = tuple(child_changed)

    def __repr__(self):
        return (
            f"SchedulerInputs(trigger={self.trigger!r}, prev_self_root={self.prev_self_root!r}, "
            f"child_roots={self.child_roots!r}, child_changed={self.child_changed!r})"
        )


SchedulingPredicate = Callable[[SchedulerInputs, Mapping[str, object]], bool]


@dataclass(frozen=True)
class ProgramNode:
    """A named program plus the scheduler children that gate it.

    The node graph must be a proper tree and module ids must be unique
    within one application tree (checked by :func:`validate_tree`).
    """

    module_id: str
    program: FieldProgram
    guard: SchedulingPredicate
    children: Tuple["ProgramNode", ...] = ()


def validate_tree(root: ProgramNode) -> None:
    seen: set = set()

    def walk(node: ProgramNode):
        if node.module_id in seen:
            raise ConfigurationFault(
                f"module id {node.module_id!r} appears more than once in the application tree"
            )
        seen.add(node.module_id)
        for child in node.children:
            walk(child)

    walk(root)


def module_paths(root: ProgramNode) -> Dict[str, Tuple[int, ...]]:
    """Map each module id to its child-index path from the tree root."""
    out: Dict[str, Tuple[int, ...]] = {}

    def walk(node: ProgramNode, path: Tuple[int, ...]):
        out[node.module_id] = path
        for i, child in enumerate(node.children):
            walk(child, path + (i,))

    walk(root, ())
    return out


class ExportMessage:
    """Tree of value trees mirroring the application tree's shape."""

    __slots__ = ("tree", "children")

    def __init__(self, tree: ValueTree, children: Tuple["ExportMessage", ...] = ()):
        self.tree = tree
        self.children = children

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, ExportMessage):
            return NotImplemented
        if len(self.children) != len(other.children):
            return False
        if self.tree != other.tree:
            return False
        return all(a == b for a, b in zip(self.children, other.children))

    def __hash__(self):
        return hash((id(self.tree), len(self.children)))

    def subtree(self, path: Sequence[int]) -> "ExportMessage":
        node = self
        for index in path:
            if index >= len(node.children):
                raise ConfigurationFault(
                    f"status message has no child at index {index} (path {list(path)})"
                )
            node = node.children[index]
        return node

    def __repr__(self):
        return f"ExportMessage({self.tree!r}, {len(self.children)} children)"


_ABSENT_TREE = ValueTree(ABSENT, Tag.LITERAL, ())

_SENSOR_KEYS: Dict[str, str] = {}


def _sensor_key(module_id: str) -> str:
    key = _SENSOR_KEYS.get(module_id)
    if key is None:
        key = _SENSOR_KEYS[module_id] = "module:" + module_id
    return key


def default_export(node: ProgramNode) -> ExportMessage:
    """The empty message for an application tree: right shape, absent values.

    Installed for devices that have not spoken yet; its roots are never a
    change source for any guard and never align with real evaluations.
    """
    return ExportMessage(_ABSENT_TREE, tuple(default_export(c) for c in node.children))


LocalStatusField = Dict[DeviceId, ExportMessage]


def _inputs_from_submessage(
    own_sub: Optional[ExportMessage],
    trigger,
    fresh_child_roots: Sequence[object],
) -> SchedulerInputs:
    prev_self_root = None
    if own_sub is not None and own_sub.tree.root is not ABSENT:
        prev_self_root = own_sub.tree.root
    child_roots = tuple(None if r is ABSENT else r for r in fresh_child_roots)
    if own_sub is None:
        child_changed = (False,) * len(child_roots)
    else:
        prev_children = own_sub.children
        child_changed = tuple(
            prev_children[i].tree.root is not ABSENT
            and not values_equal(fresh, prev_children[i].tree.root)
            for i, fresh in enumerate(child_roots)
        )
    return SchedulerInputs(trigger, prev_self_root, child_roots, child_changed)


def assemble_inputs(
    node: ProgramNode,
    status: LocalStatusField,
    sensors: Mapping[str, object],
    fresh_child_roots: Sequence[object],
    *,
    device: DeviceId,
    path: Tuple[int, ...] = (),
) -> SchedulerInputs:
    """Build the guard inputs for ``node`` from the device's own history.

    The device's own previous export doubles as the record of what this
    node's guard saw last time (the export is refreshed on every firing), so
    ``child_changed`` compares fresh child roots against the child roots in
    the own previous export. Absent previous roots never register as change.
    """
    own = status.get(device)
    own_sub = own.subtree(path) if own is not None else None
    if own_sub is not None and len(own_sub.children) != len(node.children):
        raise ConfigurationFault(
            f"status shape mismatch at {node.module_id!r}: "
            f"{len(own_sub.children)} stored children vs {len(node.children)} in the tree"
        )
    return _inputs_from_submessage(own_sub, sensors.get("trigger"), fresh_child_roots)


def _evaluate_tree(
    device: DeviceId,
    tree: ProgramNode,
    status: LocalStatusField,
    sensors: Mapping[str, object],
    executed: Optional[List[str]],
) -> Tuple[ExportMessage, bool]:
    """Shared walk behind :func:`evaluate_program_tree`.

    Returns the export plus a flag telling whether any node produced a value
    tree differing from the device's previous export (used to elide inert
    broadcasts).
    """
    if "trigger" not in sensors:
        raise ConfigurationFault("sensor state must contain 'trigger'")
    work_sensors = dict(sensors)
    trigger = work_sensors.get("trigger")
    own = status.get(device)

    def seed(node: ProgramNode, own_sub: Optional[ExportMessage]):
        if own_sub is not None and len(own_sub.children) != len(node.children):
            raise ConfigurationFault(
                f"status shape mismatch at {node.module_id!r}: "
                f"{len(own_sub.children)} stored children vs {len(node.children)} in the tree"
            )
        root = own_sub.tree.root if own_sub is not None else ABSENT
        work_sensors[_sensor_key(node.module_id)] = root
        for i, child in enumerate(node.children):
            seed(child, own_sub.children[i] if own_sub is not None else None)

    seed(tree, own)

    def node_env(path: Tuple[int, ...]) -> Dict[DeviceId, object]:
        env: Dict[DeviceId, object] = {}
        for dev, message in status.items():
            sub = message
            for index in path:
                children = sub.children
                if index >= len(children):
                    raise ConfigurationFault(
                        f"status of device {dev} does not match the application tree "
                        f"(missing child {index} at path {list(path)})"
                    )
                sub = children[index]
            sub_tree = sub.tree
            if sub_tree.root is ABSENT and not sub_tree.children:
                continue  # never-spoken placeholder, aligns with nothing
            env[dev] = sub_tree
        return env

    def eval_node(
        node: ProgramNode,
        own_sub: Optional[ExportMessage],
        path: Tuple[int, ...],
    ) -> Tuple[ExportMessage, bool]:
        node_children = node.children
        if own_sub is not None and len(own_sub.children) != len(node_children):
            raise ConfigurationFault(
                f"status shape mismatch at {node.module_id!r}: "
                f"{len(own_sub.children)} stored children vs {len(node_children)} in the tree"
            )
        child_exports: List[ExportMessage] = []
        changed = False
        for i, child in enumerate(node_children):
            export, child_changed = eval_node(
                child, own_sub.children[i] if own_sub is not None else None, path + (i,)
            )
            child_exports.append(export)
            changed = changed or child_changed
        guard = node.guard
        if getattr(guard, "always_true", False):
            scheduled = True
        else:
            fresh_roots = [e.tree.root for e in child_exports]
            inputs = _inputs_from_submessage(own_sub, trigger, fresh_roots)
            scheduled = guard(inputs, work_sensors)
        previous_tree = own_sub.tree if own_sub is not None else None
        if scheduled:
            value_tree = evaluate_round(device, node.program, node_env(path), work_sensors)
            if executed is not None:
                executed.append(node.module_id)
            if not changed:
                changed = previous_tree is None or value_tree != previous_tree
        elif previous_tree is not None:
            value_tree = previous_tree
        else:
            value_tree = _ABSENT_TREE
        work_sensors[_sensor_key(node.module_id)] = value_tree.root
        return ExportMessage(value_tree, tuple(child_exports)), changed

    return eval_node(tree, own, ())


def evaluate_program_tree(
    device: DeviceId,
    tree: ProgramNode,
    status: LocalStatusField,
    sensors: Mapping[str, object],
    *,
    executed: Optional[List[str]] = None,
) -> ExportMessage:
    """Walk the application tree once and produce the outgoing export.

    Children are always evaluated (recursively, post-order) before their
    parent's guard runs; a node whose guard answers False contributes its
    previous value tree unchanged. When ``executed`` is given, the module id
    of every node that actually ran is appended to it.

    The provided sensor state is copied and extended with ``module:<id>``
    entries: seeded from the device's own previous export, then overwritten
    with fresh roots as nodes complete, so later nodes observe earlier
    results from the same walk.
    """
    export, _ = _evaluate_tree(device, tree, status, sensors, executed)
    return export


# ---------------------------------------------------------------------------
# Guard constructors
# ---------------------------------------------------------------------------


def always_guard() -> SchedulingPredicate:
    """Run on every firing (a node with no scheduling condition)."""

    def guard(inputs: SchedulerInputs, sensors: Mapping[str, object]) -> bool:
        return True

    guard.always_true = True  # lets the tree walk skip assembling inputs
    return guard


def any_child_true_guard() -> SchedulingPredicate:
    """Run when any scheduler child produced a truthy value this round."""

    def guard(inputs: SchedulerInputs, sensors: Mapping[str, object]) -> bool:
        return any(bool(r) for r in inputs.child_roots if r is not None)

    return guard


def timer_guard(period: float) -> SchedulingPredicate:
    """True when at least ``period`` seconds of platform time elapsed since
    the last True answer. Reads the platform clock from sensor ``"time"``.

    Each call to this factory creates an independent last-fire state. A tiny
    slack absorbs float noise in repeated additions of the period.
    """
    if not period > 0:
        raise ValueError(f"timer period must be positive, got {period!r}")
    slack = 1e-9
    last_fire: List[Optional[float]] = [None]

    def guard(inputs: SchedulerInputs, sensors: Mapping[str, object]) -> bool:
        now = float(sensors["time"])
        if last_fire[0] is None or now - last_fire[0] >= period - slack:
            last_fire[0] = now
            return True
        return False

    return guard


def reactive_guard(accepted: Sequence[TriggerPattern]) -> SchedulingPredicate:
    """True iff the current trigger matches any of the accepted patterns."""
    patterns = tuple(accepted)
    for p in patterns:
        if not isinstance(p, TriggerPattern):
            raise ValueError(f"not a trigger pattern: {p!r}")

    def guard(inputs: SchedulerInputs, sensors: Mapping[str, object]) -> bool:
        trigger = inputs.trigger
        return isinstance(trigger, Trigger) and any(p.matches(trigger) for p in patterns)

    return guard


def first_run_or(inner: SchedulingPredicate) -> SchedulingPredicate:
    """Force one initial execution, then defer to the wrapped guard."""

    def guard(inputs: SchedulerInputs, sensors: Mapping[str, object]) -> bool:
        if inputs.prev_self_root is None:
            return True
        return inner(inputs, sensors)

    return guard


def sensor_changed_guard(name: str) -> SchedulingPredicate:
    """True when the named sensor's value differs from the previous guard
    evaluation (the first evaluation never reports a change)."""
    previous: List[object] = [ABSENT]

    def guard(inputs: SchedulerInputs, sensors: Mapping[str, object]) -> bool:
        current = sensors.get(name, ABSENT)
        before = previous[0]
        previous[0] = current
        if before is ABSENT:
            return False
        return not values_equal(current, before)

    return guard


def changed_filtered_guard(
    threshold: float, low_pass_alpha: float, source: str = "value"
) -> FieldProgram:
    """Program fragment gating on smoothed change of a numeric sensor.

    Maintains ``s <- alpha * x + (1 - alpha) * s`` over the sensor named by
    ``source`` and outputs True iff the filtered value drifted more than
    ``threshold`` away from its value at the last True output. Wrap the
    returned program in a :class:`ProgramNode` to build a scheduler node.
    """
    if not (0 < low_pass_alpha <= 1):
        raise ValueError(f"low_pass_alpha must be in (0, 1], got {low_pass_alpha!r}")

    def program(ctx: RoundContext):
        x = float(ctx.sensor(source))

        def update(state):
            filtered, reference, _ = state
            if filtered is ABSENT:
                # first evaluation: filter starts at the input and fires once
                return (x, x, True)
            smoothed = low_pass_alpha * x + (1.0 - low_pass_alpha) * filtered
            if abs(smoothed - reference) > threshold:
                return (smoothed, smoothed, True)
            return (smoothed, reference, False)

        return rep(ctx, lambda: (ABSENT, ABSENT, False), update)[2]

    return program
