"""Batch runner: expand a declarative sweep, run every cell x seed, merge CSVs.

The sweep file is TOML with a mandatory ``[sweep]`` section and an optional
``[output]`` section::

    [sweep]
    scenario = ["gradient"]                 # gradient | moving | channel
    algorithm = ["classic", "time_fluid"]
    lambda_inv = [0.1]                      # mean network latency, seconds
    epsilon = [0.01, 1.0]                   # movement/value tolerance, metres
    speed = [0.0, 1.0]                      # mobile device speed, m/s
    seeds = [0, 1, 2]                       # or: seeds = { start = 0, count = 10 }
    duration = 150.0                        # simulated seconds per run
    grid = 11                               # grid side (channel doubles width)

    [output]
    directory = "results"
    parallel = 1

Each (cell, seed) pair runs exactly once and writes its own CSV under
``<out>/runs/``; the merged CSV is ordered by (scenario, algorithm,
lambda_inv, epsilon, speed, seed, time) no matter how the work was
scheduled, so reruns are byte-identical at any parallelism.
"""

from __future__ import annotations

import argparse
import multiprocessing
import os
import sys
from dataclasses import dataclass, replace
from itertools import product
from typing import List, Optional, Sequence, Tuple

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .experiments import (
    ALGORITHMS,
    CSV_HEADER,
    SCENARIOS,
    ScenarioSpec,
    format_value,
    run_scenario,
    trace_lines,
    write_trace,
)


class SweepConfigError(Exception):
    pass


@dataclass(frozen=True)
class SweepConfig:
    scenarios: Tuple[str, ...]
    algorithms: Tuple[str, ...]
    lambda_invs: Tuple[float, ...]
    epsilons: Tuple[float, ...]
    speeds: Tuple[float, ...]
    seeds: Tuple[int, ...]
    duration: float
    grid: int
    channel_width: float = 5.0
    out_dir: Optional[str] = None
    parallel: int = 1

    def cells(self) -> List[Tuple[str, str, float, float, float]]:
        """Cartesian product of the swept variables, in canonical order."""
        return list(
            product(
                sorted(set(self.scenarios)),
                sorted(set(self.algorithms)),
                sorted(set(self.lambda_invs)),
                sorted(set(self.epsilons)),
                sorted(set(self.speeds)),
            )
        )

    def specs(self) -> List[ScenarioSpec]:
        return [
            ScenarioSpec(
                kind=scenario,
                algorithm=algorithm,
                mean_latency=lam,
                epsilon=eps,
                speed=speed,
                seed=seed,
                duration=self.duration,
                grid=self.grid,
                channel_width=self.channel_width,
            )
            for scenario, algorithm, lam, eps, speed in self.cells()
            for seed in sorted(set(self.seeds))
        ]


def _require(data: dict, key: str, kinds, where: str):
    if key not in data:
        raise SweepConfigError(f"missing key {key!r} in [{where}]")
    value = data[key]
    if not isinstance(value, kinds):
        raise SweepConfigError(f"key {key!r} in [{where}] has the wrong type: {value!r}")
    return value


def _number_list(data: dict, key: str, where: str, minimum=None, strict=False) -> Tuple[float, ...]:
    raw = _require(data, key, list, where)
    if not raw:
        raise SweepConfigError(f"list {key!r} in [{where}] must not be empty")
    values = []
    for item in raw:
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            raise SweepConfigError(f"list {key!r} holds a non-number: {item!r}")
        value = float(item)
        if minimum is not None and (value < minimum or (strict and value == minimum)):
            bound = "above" if strict else "at least"
            raise SweepConfigError(f"{key!r} values must be {bound} {minimum}: {value!r}")
        values.append(value)
    return tuple(values)


def _seed_list(data: dict, where: str) -> Tuple[int, ...]:
    raw = _require(data, "seeds", (list, dict), where)
    if isinstance(raw, dict):
        unknown = set(raw) - {"start", "count"}
        if unknown:
            raise SweepConfigError(f"unknown seed range keys: {sorted(unknown)}")
        start, count = raw.get("start", 0), raw.get("count")
        if not isinstance(start, int) or not isinstance(count, int) or count < 1:
            raise SweepConfigError(f"seed range needs integer start and positive count: {raw!r}")
        return tuple(range(start, start + count))
    seeds = []
    for item in raw:
        if isinstance(item, bool) or not isinstance(item, int):
            raise SweepConfigError(f"seeds must be integers, got {item!r}")
        seeds.append(item)
    if not seeds:
        raise SweepConfigError("seed list must not be empty")
    if len(set(seeds)) != len(seeds):
        raise SweepConfigError("seeds must be distinct")
    return tuple(seeds)


_SWEEP_KEYS = {
    "scenario",
    "algorithm",
    "lambda_inv",
    "epsilon",
    "speed",
    "seeds",
    "duration",
    "grid",
    "channel_width",
}
_OUTPUT_KEYS = {"directory", "parallel"}


def parse_config(text: str) -> SweepConfig:
    """Parse and validate the sweep file; unknown keys are rejected."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise SweepConfigError(f"config parse error: {exc}") from exc

    unknown_sections = set(data) - {"sweep", "output"}
    if unknown_sections:
        raise SweepConfigError(f"unknown sections: {sorted(unknown_sections)}")
    if "sweep" not in data:
        raise SweepConfigError("missing [sweep] section")
    sweep = data["sweep"]
    unknown = set(sweep) - _SWEEP_KEYS
    if unknown:
        raise SweepConfigError(f"unknown keys in [sweep]: {sorted(unknown)}")

    scenarios = tuple(_require(sweep, "scenario", list, "sweep"))
    for s in scenarios:
        if s not in SCENARIOS:
            raise SweepConfigError(f"unknown scenario {s!r} (choose from {SCENARIOS})")
    algorithms = tuple(_require(sweep, "algorithm", list, "sweep"))
    for a in algorithms:
        if a not in ALGORITHMS:
            raise SweepConfigError(f"unknown algorithm {a!r} (choose from {ALGORITHMS})")
    if not scenarios or not algorithms:
        raise SweepConfigError("scenario and algorithm lists must not be empty")

    duration = _require(sweep, "duration", (int, float), "sweep")
    if not duration > 0:
        raise SweepConfigError(f"duration must be positive: {duration!r}")
    grid = sweep.get("grid", 11)
    if not isinstance(grid, int) or grid < 2:
        raise SweepConfigError(f"grid must be an integer >= 2: {grid!r}")
    channel_width = float(sweep.get("channel_width", 5.0))
    if channel_width < 0:
        raise SweepConfigError(f"channel_width must be non-negative: {channel_width!r}")

    out_dir, parallel = None, 1
    if "output" in data:
        output = data["output"]
        unknown = set(output) - _OUTPUT_KEYS
        if unknown:
            raise SweepConfigError(f"unknown keys in [output]: {sorted(unknown)}")
        out_dir = output.get("directory")
        parallel = output.get("parallel", 1)
        if not isinstance(parallel, int) or parallel < 1:
            raise SweepConfigError(f"parallel must be a positive integer: {parallel!r}")

    return SweepConfig(
        scenarios=scenarios,
        algorithms=algorithms,
        lambda_invs=_number_list(sweep, "lambda_inv", "sweep", minimum=0.0, strict=True),
        epsilons=_number_list(sweep, "epsilon", "sweep", minimum=0.0),
        speeds=_number_list(sweep, "speed", "sweep", minimum=0.0),
        seeds=_seed_list(sweep, "sweep"),
        duration=float(duration),
        grid=grid,
        channel_width=channel_width,
        out_dir=out_dir,
        parallel=parallel,
    )


def default_config() -> SweepConfig:
    """Desk-scale sweep used when no config file is given."""
    return SweepConfig(
        scenarios=("gradient",),
        algorithms=("classic", "time_fluid"),
        lambda_invs=(0.1,),
        epsilons=(0.01, 1.0),
        speeds=(0.0, 1.0),
        seeds=tuple(range(10)),
        duration=150.0,
        grid=11,
    )


def run_filename(spec: ScenarioSpec) -> str:
    return (
        f"{spec.kind}__{spec.algorithm}"
        f"__lam_{format_value(spec.mean_latency)}"
        f"__eps_{format_value(spec.epsilon)}"
        f"__v_{format_value(spec.speed)}"
        f"__seed_{spec.seed}.csv"
    )


def _run_job(args: Tuple[ScenarioSpec, str]) -> List[str]:
    """Worker body: run one (cell, seed), write its CSV, return its data lines."""
    spec, runs_dir = args
    rows = run_scenario(spec)
    write_trace(rows, spec, os.path.join(runs_dir, run_filename(spec)))
    return trace_lines(rows, spec)[1:]


def run_batch(config: SweepConfig, out_dir: str, parallel: int = 1) -> str:
    """Execute every (cell x seed) once; return the merged CSV path.

    The merge happens in canonical spec order regardless of worker
    scheduling, so the merged file is deterministic under any parallelism.
    A failing run aborts the batch with its spec echoed; runs that already
    finished keep their per-run files.
    """
    runs_dir = os.path.join(out_dir, "runs")
    os.makedirs(runs_dir, exist_ok=True)
    specs = config.specs()
    jobs = [(spec, runs_dir) for spec in specs]

    try:
        if parallel > 1:
            with multiprocessing.Pool(parallel) as pool:
                per_run_lines = pool.map(_run_job, jobs)
        else:
            per_run_lines = [_run_job(job) for job in jobs]
    except Exception as exc:
        raise RuntimeError(f"sweep aborted: {exc}") from exc

    merged_path = os.path.join(out_dir, "merged.csv")
    tmp_path = merged_path + ".tmp"
    with open(tmp_path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(CSV_HEADER + "\n")
        for lines in per_run_lines:
            for line in lines:
                handle.write(line + "\n")
    os.replace(tmp_path, merged_path)
    return merged_path


def _apply_quick(config: SweepConfig) -> SweepConfig:
    return replace(
        config,
        grid=min(config.grid, 7),
        duration=min(config.duration, 30.0),
        seeds=config.seeds[:2],
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="fieldsched",
        description="Run seeded simulation sweeps and write per-run plus merged CSVs.",
    )
    parser.add_argument("--config", help="sweep file (TOML); omit for the desk-scale default")
    parser.add_argument("--out", default=None, help="output directory (default: results)")
    parser.add_argument("--parallel", type=int, default=None, help="worker processes")
    parser.add_argument("--scenario", choices=SCENARIOS, help="restrict to one scenario")
    parser.add_argument("--quick", action="store_true", help="small smoke preset")
    args = parser.parse_args(argv)

    try:
        if args.config:
            with open(args.config, "r", encoding="utf-8") as handle:
                config = parse_config(handle.read())
        else:
            config = default_config()
        if args.scenario:
            if args.scenario not in config.scenarios:
                raise SweepConfigError(
                    f"--scenario {args.scenario} is not part of this sweep"
                )
            config = replace(config, scenarios=(args.scenario,))
        if args.quick:
            config = _apply_quick(config)
    except (OSError, SweepConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out_dir = args.out or config.out_dir or "results"
    parallel = args.parallel if args.parallel is not None else config.parallel
    if parallel < 1:
        print("error: --parallel must be at least 1", file=sys.stderr)
        return 2

    total = len(config.specs())
    print(f"running {total} simulations -> {out_dir}")
    try:
        merged = run_batch(config, out_dir, parallel)
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"merged results: {merged}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
