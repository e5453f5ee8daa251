"""Reusable coordination blocks: gradient, broadcast, channel, stability.

All blocks are plain field programs built on :mod:`fieldsched.calculus`.
The neighbour exchange always happens unconditionally (never inside a
branch), so sources and non-sources keep feeding the network alike.
"""

from __future__ import annotations

import math
from typing import Callable

from .calculus import EvaluationFault, RoundContext, rep, share
from .values import ABSENT, NeighborField, values_equal

Metric = Callable[[RoundContext], NeighborField]


def range_metric(ctx: RoundContext) -> NeighborField:
    """Per-neighbour distance estimates as provided by the platform."""
    return ctx.sensor("nbr_range")


def distance_to(ctx: RoundContext, source: bool, metric: Metric = range_metric) -> float:
    """Self-healing minimum distance to the nearest source device.

    Adaptive Bellman-Ford over ``share``: sources hold 0, everyone else
    takes the minimum over neighbours of their shared estimate plus the edge
    length, starting from infinity.
    """

    def update(field: NeighborField) -> float:
        edges = metric(ctx)
        if not isinstance(edges, NeighborField):
            raise EvaluationFault(
                f"metric must produce a neighbouring field, got {type(edges).__name__}",
                path=ctx.path,
            )
        best = math.inf
        for dev, their_distance in field.items():
            if dev == ctx.self_id:
                continue
            edge = edges.get(dev)
            if edge is None:
                continue
            if edge < 0:
                raise EvaluationFault(f"negative metric for neighbour {dev}: {edge!r}", path=ctx.path)
            candidate = their_distance + edge
            if candidate < best:
                best = candidate
        return 0.0 if source else best

    return share(ctx, lambda: math.inf, update)


def broadcast(ctx: RoundContext, source: bool, value, metric: Metric = range_metric):
    """Propagate the value held at the source along descending distance.

    Every device adopts the value of the entry (its own previous one
    included) with minimal distance to the source; ties break on the
    smallest device id. At the source the local value wins outright.
    """
    distance = distance_to(ctx, source, metric)

    def update(field: NeighborField):
        if source:
            return (distance, value)
        best = None
        for dev, entry in field.items():  # ascending id: stable tie-break
            their_distance, their_value = entry
            if best is None or their_distance < best[0]:
                best = (their_distance, their_value)
        adopted = best[1] if best is not None else value
        return (distance, adopted)

    return share(ctx, lambda: (math.inf, value), update)[1]


def distance_between(
    ctx: RoundContext, a: bool, b: bool, metric: Metric = range_metric
) -> float:
    """Distance between the two flagged endpoints, known network-wide:
    the a-endpoint broadcasts its distance to b."""
    return broadcast(ctx, a, distance_to(ctx, b, metric), metric)


def channel(
    ctx: RoundContext, a: bool, b: bool, w: float, metric: Metric = range_metric
) -> bool:
    """Membership in the redundant corridor between endpoints a and b.

    A device belongs to the channel of width ``w`` when its two endpoint
    distances sum to no more than the endpoint-to-endpoint distance plus
    ``w``.
    """
    if w < 0:
        raise EvaluationFault(f"channel width must be non-negative, got {w!r}", path=ctx.path)
    to_a = distance_to(ctx, a, metric)
    to_b = distance_to(ctx, b, metric)
    across = distance_between(ctx, a, b, metric)
    return to_a + to_b <= across + w


def is_signal_stable(ctx: RoundContext, value, window: float) -> bool:
    """True once ``value`` has been exactly unchanged for ``window`` seconds
    of platform time. Any change restarts the clock."""
    if not window > 0:
        raise EvaluationFault(f"stability window must be positive, got {window!r}", path=ctx.path)
    now = float(ctx.sensor("time"))

    def update(state):
        previous, since = state
        if previous is ABSENT or not values_equal(value, previous):
            return (value, now)
        return (previous, since)

    _, since = rep(ctx, lambda: (ABSENT, now), update)
    return now - since >= window
