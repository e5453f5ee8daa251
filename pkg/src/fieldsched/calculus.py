"""Single-round evaluation of one field program at one device.

A field program is a plain callable ``program(ctx) -> value`` built from the
combinators in this module (:func:`rep`, :func:`nbr`, :func:`share`,
:func:`branch`, :func:`fold_hood`). Evaluating it produces a
:class:`ValueTree` that mirrors the unfolding of the program: every
combinator call appends one node, in program order, to the currently open
node. The tree is both the round's result (its root value) and the message
content other devices read from.

Alignment: a neighbour's previous tree contributes to ``nbr``/``share`` at
some position only if, walking the same child indexes from its root, every
construct tag matches and every branch took the same arm. Devices that
branched differently therefore never exchange data inside the arms.
"""

from __future__ import annotations

from enum import Enum
from typing import Callable, Mapping, Optional, Tuple

from .values import ABSENT, DeviceId, NeighborField, values_equal


class Tag(Enum):
    REP = "rep"
    NBR = "nbr"
    SHARE = "share"
    BRANCH = "branch"
    FOLD = "fold"
    LITERAL = "literal"
    APPLY = "apply"


class EvaluationFault(Exception):
    """A fault raised while evaluating a program; carries the tree path."""

    def __init__(self, message: str, path: Optional[tuple] = None):
        super().__init__(message)
        self.path = path

    def __str__(self):
        base = super().__str__()
        if self.path is not None:
            return f"{base} (at tree path {list(self.path)})"
        return base


class SensorNotFound(EvaluationFault):
    pass


class ValueTree:
    """One node of the tree built by a round: a value plus tagged children.

    ``taken`` is only meaningful for branch nodes and records which arm ran.
    Trees are immutable once built; equality is structural. ``exchanges``
    says whether any node in here is neighbour-readable (an nbr or share
    node), which is what decides if a change matters remotely.
    """

    __slots__ = ("root", "tag", "children", "taken", "exchanges")

    def __init__(self, root, tag: Tag, children: Tuple["ValueTree", ...] = (), taken=None):
        self.root = root
        self.tag = tag
        self.children = children
        self.taken = taken
        self.exchanges = (
            tag is Tag.NBR
            or tag is Tag.SHARE
            or any(child.exchanges for child in children)
        )

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, ValueTree):
            return NotImplemented
        if self.tag is not other.tag or self.taken != other.taken:
            return False
        if not values_equal(self.root, other.root):
            return False
        if len(self.children) != len(other.children):
            return False
        return all(a == b for a, b in zip(self.children, other.children))

    def __hash__(self):
        return hash((self.tag, self.taken, len(self.children)))

    def __repr__(self):
        return f"ValueTree({self.root!r}, {self.tag.value}, {len(self.children)} children)"


# A step along a tree path: (child index, construct tag, branch arm or None).
PathStep = Tuple[int, Tag, Optional[bool]]

VTreeEnvironment = Mapping[DeviceId, ValueTree]
SensorState = Mapping[str, object]
FieldProgram = Callable[["RoundContext"], object]


def _descend(tree: ValueTree, path: Tuple[PathStep, ...]) -> Optional[ValueTree]:
    """Follow ``path`` from the root of ``tree``; None when alignment breaks."""
    node = tree
    for index, tag, taken in path:
        children = node.children
        if index >= len(children):
            return None
        node = children[index]
        if node.tag is not tag:
            return None
        if tag is Tag.BRANCH and node.taken is not taken:
            return None
    return node


class RoundContext:
    """Evaluation state for one round: identity, neighbour trees, sensors.

    The context also tracks the position in the tree being built; it advances
    in strict program order, so re-running the same program over the same
    inputs always produces an identically shaped tree.
    """

    __slots__ = ("self_id", "env", "sensors", "_frames", "_path")

    def __init__(self, self_id: DeviceId, env: VTreeEnvironment, sensors: SensorState):
        self.self_id = self_id
        self.env = env
        self.sensors = sensors
        self._frames = [[]]
        self._path: list = []

    @property
    def path(self) -> tuple:
        """The path of the currently open node (the cursor)."""
        return tuple(self._path)

    def sensor(self, name: str):
        try:
            return self.sensors[name]
        except KeyError:
            raise SensorNotFound(f"sensor {name!r} not available", path=self.path) from None

    # -- internal helpers used by the combinators ------------------------------

    def _next_step(self, tag: Tag, taken=None) -> PathStep:
        return (len(self._frames[-1]), tag, taken)

    def _own_previous(self, step: PathStep) -> Optional[ValueTree]:
        own = self.env.get(self.self_id)
        if own is None:
            return None
        self._path.append(step)
        node = _descend(own, self._path)
        self._path.pop()
        return node

    def _aligned_neighbour_roots(self, step: PathStep) -> dict:
        """Roots of every neighbour's node aligned at the given step (self excluded)."""
        self._path.append(step)
        path = tuple(self._path)
        self._path.pop()
        out = {}
        for dev, tree in self.env.items():
            if dev == self.self_id:
                continue
            node = _descend(tree, path)
            if node is not None and node.root is not ABSENT:
                out[dev] = node.root
        return out

    def _enter(self, step: PathStep):
        self._path.append(step)
        self._frames.append([])

    def _exit(self) -> Tuple[ValueTree, ...]:
        children = tuple(self._frames.pop())
        self._path.pop()
        return children

    def _emit(self, node: ValueTree):
        self._frames[-1].append(node)


def rep(ctx: RoundContext, initial: Callable[[], object], update: Callable[[object], object]):
    """Evolve a device-local value over rounds.

    ``update`` is applied to the previous round's value at this tree position
    when one exists (an aligned rep node in the device's own previous tree),
    otherwise to ``initial()``. The initial thunk is not invoked when prior
    state exists.
    """
    step = ctx._next_step(Tag.REP)
    prev = ctx._own_previous(step)
    if prev is not None and prev.root is not ABSENT:
        old = prev.root
    else:
        old = initial()
    ctx._enter(step)
    value = update(old)
    children = ctx._exit()
    ctx._emit(ValueTree(value, Tag.REP, children))
    return value


def nbr(ctx: RoundContext, local) -> NeighborField:
    """Exchange a value with aligned neighbours.

    Returns the field mapping the device itself to ``local`` and every
    aligned neighbour to the value it shared here on its last round. The
    node's root is ``local``: that is what neighbours will read next.
    """
    step = ctx._next_step(Tag.NBR)
    entries = ctx._aligned_neighbour_roots(step)
    entries[ctx.self_id] = local
    ctx._emit(ValueTree(local, Tag.NBR, ()))
    return NeighborField(entries)


def share(ctx: RoundContext, initial: Callable[[], object], update: Callable[[NeighborField], object]):
    """Compute from neighbours' previous results and publish the new one.

    ``update`` receives the field of aligned neighbours' previous share
    results, with the self entry holding the device's own previous result
    (or ``initial()`` when there is none). The returned value becomes the
    node root, visible to neighbours on their next round.
    """
    step = ctx._next_step(Tag.SHARE)
    entries = ctx._aligned_neighbour_roots(step)
    prev = ctx._own_previous(step)
    if prev is not None and prev.root is not ABSENT:
        entries[ctx.self_id] = prev.root
    else:
        entries[ctx.self_id] = initial()
    field = NeighborField(entries)
    ctx._enter(step)
    value = update(field)
    children = ctx._exit()
    ctx._emit(ValueTree(value, Tag.SHARE, children))
    return value


def branch(ctx: RoundContext, cond: bool, then: Callable[[], object], else_: Callable[[], object]):
    """Evaluate exactly one arm and record which one was taken.

    Devices whose previous round took the other arm fall out of alignment
    for everything nested here, so rep state restarts and nbr/share see no
    counterpart from them.
    """
    if not isinstance(cond, bool):
        raise EvaluationFault(f"branch condition must be a bool, got {cond!r}", path=ctx.path)
    step = ctx._next_step(Tag.BRANCH, cond)
    ctx._enter(step)
    value = then() if cond else else_()
    children = ctx._exit()
    ctx._emit(ValueTree(value, Tag.BRANCH, children, taken=cond))
    return value


def fold_hood(field: NeighborField, base, combine: Callable[[object, object], object]):
    """Deterministic left fold over a field's entries in ascending device id."""
    if not isinstance(field, NeighborField):
        raise EvaluationFault(f"fold_hood expects a neighbouring field, got {type(field).__name__}")
    acc = base
    for _, value in field.items():
        acc = combine(acc, value)
    return acc


def evaluate_round(
    device: DeviceId,
    program: FieldProgram,
    env: VTreeEnvironment,
    sensors: SensorState,
) -> ValueTree:
    """Run one round of ``program`` at ``device`` and return its value tree.

    Pure in its inputs: no hidden state, no real clock. ``env`` maps each
    neighbour (and possibly the device itself) to the tree from its latest
    round; ``sensors`` must contain the reserved name ``"trigger"``.
    """
    if "trigger" not in sensors:
        raise SensorNotFound("sensor 'trigger' not available", path=())
    ctx = RoundContext(device, env, sensors)
    try:
        result = program(ctx)
    except EvaluationFault as fault:
        if fault.path is None:
            fault.path = ctx.path
        raise
    children = tuple(ctx._frames[0])
    return ValueTree(result, Tag.APPLY, children)
