/**
 * CLI: read a merged sweep CSV, write the figure set.
 *
 *   node dist/src/main.js --in results/merged.csv --out results/figures
 */

import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { METRICS } from "./aggregate.js";
import { SchemaError, parseResults } from "./frame.js";
import { PlotError, renderBars, renderTimeseries } from "./plots.js";

function parseArgs(argv: string[]): { input: string; output: string } {
  let input: string | undefined;
  let output: string | undefined;
  for (let i = 0; i < argv.length; i++) {
    if (argv[i] === "--in") input = argv[++i];
    else if (argv[i] === "--out") output = argv[++i];
    else throw new Error(`unknown argument '${argv[i]}' (expected --in FILE --out DIR)`);
  }
  if (!input || !output) throw new Error("both --in FILE and --out DIR are required");
  return { input, output };
}

export function generateFigures(csvText: string): Map<string, string> {
  const frame = parseResults(csvText);
  const figures = new Map<string, string>();
  for (const metric of METRICS) {
    for (const [name, svg] of renderTimeseries(frame, metric)) {
      figures.set(name, svg);
    }
  }
  for (const [name, svg] of renderBars(frame)) {
    figures.set(name, svg);
  }
  return figures;
}

export function main(argv: string[]): number {
  let args;
  try {
    args = parseArgs(argv);
  } catch (error) {
    console.error(`error: ${(error as Error).message}`);
    return 2;
  }
  let csvText: string;
  try {
    csvText = readFileSync(args.input, "utf8");
  } catch (error) {
    console.error(`error: cannot read ${args.input}: ${(error as Error).message}`);
    return 2;
  }
  try {
    const figures = generateFigures(csvText);
    mkdirSync(args.output, { recursive: true });
    const names = [...figures.keys()].sort();
    for (const name of names) {
      writeFileSync(join(args.output, name), figures.get(name)!, "utf8");
    }
    console.log(`wrote ${names.length} figures to ${args.output}`);
    return 0;
  } catch (error) {
    if (error instanceof SchemaError || error instanceof PlotError) {
      console.error(`error: ${error.message}`);
      return 1;
    }
    throw error;
  }
}

if (process.argv[1] && process.argv[1].endsWith("main.js")) {
  process.exit(main(process.argv.slice(2)));
}
