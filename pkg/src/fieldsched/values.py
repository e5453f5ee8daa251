"""Value model shared by every layer: scalars, tuples, neighbouring fields.

A value is one of: float/int (double precision numbers), bool, str, a tuple
of values, or a :class:`NeighborField` mapping device ids to values.
Neighbouring fields never nest inside one another.
"""

from __future__ import annotations

import math
from typing import Iterable, Iterator, Mapping, Tuple

DeviceId = int


class Absent:
    """Singleton marker for "no value here yet" (default exports, missing state).

    Never a legal program value: guards must not treat it as a change source
    and field folds never see it.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "ABSENT"


ABSENT = Absent()


class NeighborField:
    """Immutable finite map ``DeviceId -> value``, iterated in ascending id order.

    The ordering guarantee is what makes folds over fields deterministic.
    """

    __slots__ = ("_items", "_index")

    def __init__(self, entries: Mapping[DeviceId, object] | Iterable[Tuple[DeviceId, object]]):
        if not isinstance(entries, dict):
            entries = dict(entries)
        items = sorted(entries.items())
        for dev, value in items:
            if value.__class__ is NeighborField:
                raise ValueError("neighbouring fields cannot nest inside one another")
            if not isinstance(dev, int):
                raise TypeError(f"field keys must be device ids, got {dev!r}")
        self._items = tuple(items)
        self._index = dict(items)

    def get(self, dev: DeviceId, default=None):
        return self._index.get(dev, default)

    def __getitem__(self, dev: DeviceId):
        return self._index[dev]

    def __contains__(self, dev: DeviceId) -> bool:
        return dev in self._index

    def __iter__(self) -> Iterator[DeviceId]:
        return iter(dev for dev, _ in self._items)

    def __len__(self) -> int:
        return len(self._items)

    def items(self) -> Tuple[Tuple[DeviceId, object], ...]:
        return self._items

    def ids(self) -> Tuple[DeviceId, ...]:
        return tuple(dev for dev, _ in self._items)

    def values(self) -> Tuple[object, ...]:
        return tuple(value for _, value in self._items)

    def without(self, dev: DeviceId) -> "NeighborField":
        """Copy of this field with one entry removed (used to drop the self entry)."""
        return NeighborField([(d, v) for d, v in self._items if d != dev])

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, NeighborField):
            return NotImplemented
        if len(self._items) != len(other._items):
            return False
        for (da, va), (db, vb) in zip(self._items, other._items):
            if da != db or not values_equal(va, vb):
                return False
        return True

    def __hash__(self):
        return hash(self._items)

    def __repr__(self):
        body = ", ".join(f"{d}: {v!r}" for d, v in self._items)
        return "{" + body + "}"


def values_equal(a, b) -> bool:
    """Structural value equality with exact floating-point comparison.

    bool and numbers are kept distinct (True is not 1.0 here); tuples and
    fields compare element-wise; ABSENT equals only itself.
    """
    if a is b:
        return True
    ta, tb = a.__class__, b.__class__
    if ta is bool or tb is bool:
        return ta is bool and tb is bool and a == b
    if (ta is float or ta is int) and (tb is float or tb is int):
        return a == b
    if ta is str and tb is str:
        return a == b
    if ta is tuple and tb is tuple:
        return len(a) == len(b) and all(values_equal(x, y) for x, y in zip(a, b))
    if ta is Absent or tb is Absent:
        return False
    return a == b


def euclidean(p: Tuple[float, float], q: Tuple[float, float]) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])
