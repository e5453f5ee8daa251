/**
 * Typed view of the merged sweep CSV.
 *
 * The column set must match the simulator's schema exactly and row keys
 * (scenario, algorithm, epsilon, lambda_inv, speed, seed, time) must be
 * unique; anything else is rejected up front with the offending column or
 * line, so figure code can assume a clean frame.
 */

export const EXPECTED_HEADER = [
  "time",
  "scenario",
  "algorithm",
  "epsilon",
  "lambda_inv",
  "speed",
  "seed",
  "mean_error",
  "mean_rounds",
  "stdev_rounds",
  "efficiency",
] as const;

export interface ResultRow {
  time: number;
  scenario: string;
  algorithm: string;
  epsilon: number;
  lambdaInv: number;
  speed: number;
  seed: number;
  meanError: number;
  meanRounds: number;
  stdevRounds: number;
  efficiency: number;
}

export class ResultFrame {
  constructor(readonly rows: ResultRow[]) {}

  get length(): number {
    return this.rows.length;
  }

  scenarios(): string[] {
    return distinct(this.rows.map((r) => r.scenario)).sort();
  }

  speeds(scenario: string): number[] {
    return distinctNumbers(this.rows.filter((r) => r.scenario === scenario).map((r) => r.speed));
  }

  filter(predicate: (row: ResultRow) => boolean): ResultFrame {
    return new ResultFrame(this.rows.filter(predicate));
  }
}

export class SchemaError extends Error {}

function distinct<T>(values: T[]): T[] {
  return [...new Set(values)];
}

export function distinctNumbers(values: number[]): number[] {
  return [...new Set(values)].sort((a, b) => a - b);
}

function parseNumber(raw: string, column: string, line: number): number {
  if (raw === "inf") return Infinity;
  const value = Number(raw);
  if (raw.trim() === "" || Number.isNaN(value)) {
    throw new SchemaError(`line ${line}: column '${column}' is not a number: '${raw}'`);
  }
  return value;
}

/** Parse merged-CSV text into a validated frame. */
export function parseResults(text: string): ResultFrame {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty file: expected at least the header row");
  }
  const header = lines[0]!.split(",");
  for (let i = 0; i < Math.max(header.length, EXPECTED_HEADER.length); i++) {
    if (header[i] !== EXPECTED_HEADER[i]) {
      throw new SchemaError(
        `schema mismatch in column ${i + 1}: expected '${EXPECTED_HEADER[i] ?? "<nothing>"}', found '${header[i] ?? "<nothing>"}'`,
      );
    }
  }

  const rows: ResultRow[] = [];
  const seen = new Set<string>();
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i]!.split(",");
    if (parts.length !== EXPECTED_HEADER.length) {
      throw new SchemaError(
        `line ${i + 1}: expected ${EXPECTED_HEADER.length} fields, found ${parts.length}`,
      );
    }
    const row: ResultRow = {
      time: parseNumber(parts[0]!, "time", i + 1),
      scenario: parts[1]!,
      algorithm: parts[2]!,
      epsilon: parseNumber(parts[3]!, "epsilon", i + 1),
      lambdaInv: parseNumber(parts[4]!, "lambda_inv", i + 1),
      speed: parseNumber(parts[5]!, "speed", i + 1),
      seed: parseNumber(parts[6]!, "seed", i + 1),
      meanError: parseNumber(parts[7]!, "mean_error", i + 1),
      meanRounds: parseNumber(parts[8]!, "mean_rounds", i + 1),
      stdevRounds: parseNumber(parts[9]!, "stdev_rounds", i + 1),
      efficiency: parseNumber(parts[10]!, "efficiency", i + 1),
    };
    const key = [row.scenario, row.algorithm, row.epsilon, row.lambdaInv, row.speed, row.seed, row.time].join("|");
    if (seen.has(key)) {
      throw new SchemaError(`line ${i + 1}: duplicate row key (${key})`);
    }
    seen.add(key);
    rows.push(row);
  }
  return new ResultFrame(rows);
}
