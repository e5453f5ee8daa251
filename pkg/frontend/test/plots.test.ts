import assert from "node:assert/strict";
import { test } from "node:test";

import { timeseries } from "../src/aggregate.js";
import { parseResults } from "../src/frame.js";
import { generateFigures } from "../src/main.js";
import { PlotError, lambdaShade, renderBars, renderTimeseries, seriesColors } from "../src/plots.js";
import { lightnessOf } from "../src/svg.js";
import { mergedCsv } from "./fixtures.js";

test("full figure set is produced without error", () => {
  const figures = generateFigures(mergedCsv());
  const names = [...figures.keys()].sort();
  // 3 metrics x 2 speed facets + 1 bar summary
  assert.equal(names.length, 3 * 2 + 1);
  assert.ok(names.includes("gradient_mean_error_v0.svg"));
  assert.ok(names.includes("gradient_efficiency_v1.svg"));
  assert.ok(names.includes("gradient_bars.svg"));
  for (const svg of figures.values()) {
    assert.ok(svg.startsWith("<svg "));
    assert.ok(svg.trimEnd().endsWith("</svg>"));
  }
});

test("classic series is the darkest line in every figure", () => {
  const frame = parseResults(mergedCsv());
  for (const speed of [0.0, 1.0]) {
    const series = timeseries(frame, "gradient", speed, "mean_error");
    const palette = seriesColors(series);
    const colors = series.map((s, i) => ({
      algorithm: s.algorithm,
      lightness: lightnessOf(palette[i]!),
    }));
    const classic = colors.filter((c) => c.algorithm === "classic");
    const reactive = colors.filter((c) => c.algorithm !== "classic");
    assert.ok(classic.length > 0 && reactive.length > 0);
    const darkestClassic = Math.min(...classic.map((c) => c.lightness));
    const darkestReactive = Math.min(...reactive.map((c) => c.lightness));
    assert.ok(
      darkestClassic < darkestReactive,
      `classic ${darkestClassic} should be darker than reactive ${darkestReactive}`,
    );
  }
});

test("unknown metric rejected", () => {
  const frame = parseResults(mergedCsv());
  assert.throws(() => renderTimeseries(frame, "latency" as never), PlotError);
});

test("missing facet is omitted", () => {
  // channel rows exist only at speed 1: no speed-0 channel figure appears
  const csv =
    mergedCsv({ scenarios: ["gradient"], speeds: [0.0, 1.0] }).trimEnd() +
    "\n" +
    mergedCsv({ scenarios: ["channel"], speeds: [1.0] }).split("\n").slice(1).join("\n");
  const figures = generateFigures(csv);
  assert.ok(figures.has("channel_mean_error_v1.svg"));
  assert.ok(!figures.has("channel_mean_error_v0.svg"));
});

test("figure generation is deterministic", () => {
  const csv = mergedCsv();
  const a = generateFigures(csv);
  const b = generateFigures(csv);
  assert.deepEqual([...a.keys()], [...b.keys()]);
  for (const [name, svg] of a) {
    assert.equal(svg, b.get(name));
  }
});

test("bar figures drop scenarios with no reactive rows", () => {
  const classicOnly = mergedCsv({ algorithms: ["classic"] });
  const figures = renderBars(parseResults(classicOnly));
  assert.equal(figures.size, 0);
});

test("lambda shading darkens with lower latency", () => {
  const frame = parseResults(mergedCsv({ lambdaInvs: [0.01, 0.1, 1.0] }));
  const svg = renderBars(frame).get("gradient_bars.svg")!;
  assert.ok(svg.includes("lam=0.01"));
  const lightness = [0, 1, 2].map((i) => lightnessOf(lambdaShade(i, 3)));
  assert.ok(lightness[0]! < lightness[1]! && lightness[1]! < lightness[2]!);
});
