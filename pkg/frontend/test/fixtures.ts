/** Synthetic merged-CSV fixtures shaped like real sweep output. */

import { EXPECTED_HEADER } from "../src/frame.js";

export interface FixtureOptions {
  scenarios?: string[];
  algorithms?: string[];
  epsilons?: number[];
  lambdaInvs?: number[];
  speeds?: number[];
  seeds?: number[];
  times?: number[];
}

export function mergedCsv(options: FixtureOptions = {}): string {
  const scenarios = options.scenarios ?? ["gradient"];
  const algorithms = options.algorithms ?? ["classic", "time_fluid"];
  const epsilons = options.epsilons ?? [0.01, 1.0];
  const lambdaInvs = options.lambdaInvs ?? [0.01, 1.0];
  const speeds = options.speeds ?? [0.0, 1.0];
  const seeds = options.seeds ?? [0, 1];
  const times = options.times ?? [0.0, 1.0, 2.0, 3.0];

  const lines = [EXPECTED_HEADER.join(",")];
  for (const scenario of scenarios) {
    for (const algorithm of algorithms) {
      for (const epsilon of epsilons) {
        for (const lambdaInv of lambdaInvs) {
          for (const speed of speeds) {
            for (const seed of seeds) {
              let rounds = 0;
              for (const time of times) {
                // classic grows 1 round/s; the reactive variant front-loads
                // and then flattens; error decays over time
                rounds = algorithm === "classic" ? time : Math.min(3, time * 2);
                const error = (10 / (1 + time)) * (1 + 0.1 * seed) * (1 + epsilon);
                const efficiency = error * Math.max(rounds, 0.1) * (1 + lambdaInv);
                const stdev = algorithm === "classic" ? 0.4 : 2.0 + speed;
                lines.push(
                  [
                    time.toFixed(1),
                    scenario,
                    algorithm,
                    epsilon,
                    lambdaInv,
                    speed.toFixed(1),
                    seed,
                    error.toFixed(6),
                    rounds.toFixed(2),
                    stdev.toFixed(2),
                    efficiency.toFixed(4),
                  ].join(","),
                );
              }
            }
          }
        }
      }
    }
  }
  return lines.join("\n") + "\n";
}
