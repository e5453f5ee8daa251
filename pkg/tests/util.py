"""Shared test helpers: synchronous lock-step drivers and small graph tools.

The synchronous driver exchanges every device's full value tree each round,
which is the reference execution mode used to check self-stabilisation
results against graph oracles.
"""

import math

from fieldsched import Trigger, evaluate_round
from fieldsched.values import NeighborField, euclidean

BASE_SENSORS = {"trigger": Trigger.tick(), "time": 0.0}


def geo_sensors(positions, topology, extra=None):
    """Per-device sensor states for a static geometric network."""
    out = {}
    for dev in topology:
        ranges = NeighborField(
            {p: euclidean(positions[dev], positions[p]) for p in topology[dev] if p != dev}
        )
        sensors = dict(BASE_SENSORS)
        sensors["position"] = positions[dev]
        sensors["nbr_range"] = ranges
        sensors["neighbours"] = tuple(p for p in topology[dev] if p != dev)
        if extra:
            sensors.update(extra(dev))
        out[dev] = sensors
    return out


def sync_rounds(program, topology, sensors, rounds, trees=None):
    """Run lock-step rounds of one program over a static topology."""
    trees = dict(trees or {})
    for _ in range(rounds):
        new = {}
        for dev in sorted(topology):
            env = {p: trees[p] for p in topology[dev] if p in trees}
            new[dev] = evaluate_round(dev, program, env, sensors[dev])
        trees = new
    return trees


def sync_until_stable(program, topology, sensors, max_rounds, trees=None):
    """Iterate lock-step rounds until no root changes (or the cap is hit)."""
    trees = dict(trees or {})
    for done in range(max_rounds):
        new = {}
        for dev in sorted(topology):
            env = {p: trees[p] for p in topology[dev] if p in trees}
            new[dev] = evaluate_round(dev, program, env, sensors[dev])
        if trees and all(dev in trees and new[dev] == trees[dev] for dev in new):
            return new, done
        trees = new
    return trees, max_rounds


def line_positions(n, spacing=5.0):
    return {i: (i * spacing, 0.0) for i in range(n)}


def disc_topology(positions, radius):
    ids = sorted(positions)
    return {
        d: tuple(
            o for o in ids if o == d or euclidean(positions[d], positions[o]) <= radius
        )
        for d in ids
    }


def random_connected_geometric(rng, n, side=30.0, radius=9.0, max_tries=100):
    """Random geometric graph, re-drawn until connected."""
    for _ in range(max_tries):
        positions = {i: (rng.uniform(0, side), rng.uniform(0, side)) for i in range(n)}
        topology = disc_topology(positions, radius)
        seen = {0}
        frontier = [0]
        while frontier:
            dev = frontier.pop()
            for peer in topology[dev]:
                if peer not in seen:
                    seen.add(peer)
                    frontier.append(peer)
        if len(seen) == n:
            return positions, topology
    raise AssertionError("could not draw a connected graph")


def brute_force_distances(positions, topology, sources):
    """Exhaustive simple-path shortest distances (independent of Dijkstra)."""
    best = {dev: math.inf for dev in topology}

    def visit(dev, dist, seen):
        if dist >= best[dev] - 1e-15:
            if dist < best[dev]:
                best[dev] = dist
            return
        best[dev] = dist
        for peer in topology[dev]:
            if peer != dev and peer not in seen:
                visit(peer, dist + euclidean(positions[dev], positions[peer]), seen | {peer})

    for source in sources:
        visit(source, 0.0, {source})
    return best
