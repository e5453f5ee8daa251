/** Seed-averaged views of a result frame, keyed by algorithm variant. */

import { ResultFrame, ResultRow, distinctNumbers } from "./frame.js";

export type Metric = "mean_error" | "mean_rounds" | "efficiency";

export const METRICS: Metric[] = ["mean_error", "mean_rounds", "efficiency"];

export function metricValue(row: ResultRow, metric: Metric): number {
  switch (metric) {
    case "mean_error":
      return row.meanError;
    case "mean_rounds":
      return row.meanRounds;
    case "efficiency":
      return row.efficiency;
  }
}

/** One renderable line: an algorithm variant averaged over seeds. */
export interface Series {
  algorithm: string;
  epsilon: number;
  lambdaInv: number;
  points: { time: number; value: number }[];
}

function mean(values: number[]): number {
  return values.reduce((a, b) => a + b, 0) / values.length;
}

export function variantKey(algorithm: string, epsilon: number, lambdaInv: number): string {
  return `${algorithm}|${epsilon}|${lambdaInv}`;
}

/**
 * Seed-mean points of one metric for every (algorithm, epsilon, lambda_inv)
 * variant in a scenario facet; classic variants sort first.
 */
export function timeseries(
  frame: ResultFrame,
  scenario: string,
  speed: number,
  metric: Metric,
): Series[] {
  const rows = frame.rows.filter((r) => r.scenario === scenario && r.speed === speed);
  const groups = new Map<string, ResultRow[]>();
  for (const row of rows) {
    const key = variantKey(row.algorithm, row.epsilon, row.lambdaInv);
    const bucket = groups.get(key);
    if (bucket) bucket.push(row);
    else groups.set(key, [row]);
  }
  const series: Series[] = [];
  for (const bucket of groups.values()) {
    const first = bucket[0]!;
    const byTime = new Map<number, number[]>();
    for (const row of bucket) {
      const value = metricValue(row, metric);
      const values = byTime.get(row.time);
      if (values) values.push(value);
      else byTime.set(row.time, [value]);
    }
    const points = [...byTime.entries()]
      .map(([time, values]) => ({ time, value: mean(values) }))
      .sort((a, b) => a.time - b.time);
    series.push({ algorithm: first.algorithm, epsilon: first.epsilon, lambdaInv: first.lambdaInv, points });
  }
  series.sort((a, b) =>
    a.algorithm === b.algorithm
      ? a.epsilon - b.epsilon || a.lambdaInv - b.lambdaInv
      : a.algorithm === "classic"
        ? -1
        : b.algorithm === "classic"
          ? 1
          : a.algorithm.localeCompare(b.algorithm),
  );
  return series;
}

/** A grouped-bar panel: value per (epsilon, lambda_inv). */
export interface BarPanel {
  metric: "mean_error" | "mean_rounds" | "stdev_rounds";
  epsilons: number[];
  lambdaInvs: number[];
  /** values[epsilonIndex][lambdaIndex] */
  values: number[][];
}

/**
 * Final-time summaries of the reactive variants for one scenario: error,
 * cost, and round-count spread per tolerance, one bar per latency, averaged
 * over every speed and seed. The classic baseline is excluded.
 */
export function barPanels(frame: ResultFrame, scenario: string): BarPanel[] {
  const rows = frame.rows.filter((r) => r.scenario === scenario && r.algorithm !== "classic");
  const lastTime = new Map<string, number>();
  for (const row of rows) {
    const runKey = `${row.epsilon}|${row.lambdaInv}|${row.speed}|${row.seed}`;
    const seen = lastTime.get(runKey);
    if (seen === undefined || row.time > seen) lastTime.set(runKey, row.time);
  }
  const finals = rows.filter(
    (row) => lastTime.get(`${row.epsilon}|${row.lambdaInv}|${row.speed}|${row.seed}`) === row.time,
  );
  const epsilons = distinctNumbers(finals.map((r) => r.epsilon));
  const lambdaInvs = distinctNumbers(finals.map((r) => r.lambdaInv));

  const metrics: BarPanel["metric"][] = ["mean_error", "mean_rounds", "stdev_rounds"];
  return metrics.map((metric) => {
    const values = epsilons.map((epsilon) =>
      lambdaInvs.map((lambdaInv) => {
        const cell = finals.filter((r) => r.epsilon === epsilon && r.lambdaInv === lambdaInv);
        if (cell.length === 0) return NaN;
        const pick = (r: ResultRow) =>
          metric === "mean_error" ? r.meanError : metric === "mean_rounds" ? r.meanRounds : r.stdevRounds;
        return mean(cell.map(pick));
      }),
    );
    return { metric, epsilons, lambdaInvs, values };
  });
}
