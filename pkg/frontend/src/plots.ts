/**
 * The two figure families: per-facet metric time series and the reactive
 * variants' bar summaries. Output is a map from file name to SVG text.
 */

import { BarPanel, METRICS, Metric, Series, barPanels, timeseries } from "./aggregate.js";
import { ResultFrame } from "./frame.js";
import { SvgCanvas, fmt, lightnessOf, scale, shade, ticks } from "./svg.js";

const WIDTH = 640;
const HEIGHT = 420;
const MARGIN = { left: 70, right: 20, top: 36, bottom: 74 };

export class PlotError extends Error {}

/** The classic baseline is always rendered darkest; reactive variants get
 * progressively lighter shades in their (epsilon, lambda) order. */
export function seriesColors(series: Series[]): string[] {
  const reactive = series.filter((s) => s.algorithm !== "classic").length;
  let reactiveIndex = 0;
  return series.map((s) => {
    if (s.algorithm === "classic") {
      return shade(260, 18, 45);
    }
    const lightness = 42 + (36 * reactiveIndex++) / Math.max(reactive - 1, 1);
    return shade(210, Math.min(lightness, 78));
  });
}

function seriesLabel(series: Series): string {
  if (series.algorithm === "classic") return "classic";
  return `${series.algorithm} eps=${fmt(series.epsilon)} lam=${fmt(series.lambdaInv)}`;
}

function finiteValues(series: Series[]): number[] {
  return series.flatMap((s) => s.points.map((p) => p.value)).filter((v) => Number.isFinite(v));
}

function drawTimeseries(series: Series[], title: string, yLabel: string): string {
  const canvas = new SvgCanvas(WIDTH, HEIGHT);
  const allTimes = series.flatMap((s) => s.points.map((p) => p.time));
  const values = finiteValues(series);
  const tLo = Math.min(...allTimes);
  const tHi = Math.max(...allTimes);
  const vLo = Math.min(0, ...values);
  const vHi = Math.max(...values, 1e-9);
  const sx = scale(tLo, tHi, MARGIN.left, WIDTH - MARGIN.right);
  const sy = scale(vLo, vHi, HEIGHT - MARGIN.bottom, MARGIN.top);

  canvas.text(WIDTH / 2, 18, title, { size: 14, anchor: "middle" });
  canvas.line(MARGIN.left, HEIGHT - MARGIN.bottom, WIDTH - MARGIN.right, HEIGHT - MARGIN.bottom, "#333");
  canvas.line(MARGIN.left, MARGIN.top, MARGIN.left, HEIGHT - MARGIN.bottom, "#333");
  for (const t of ticks(tLo, tHi)) {
    canvas.text(sx(t), HEIGHT - MARGIN.bottom + 16, fmt(t), { anchor: "middle", size: 10 });
  }
  for (const v of ticks(vLo, vHi)) {
    canvas.text(MARGIN.left - 6, sy(v) + 3, fmt(v), { anchor: "end", size: 10 });
  }
  canvas.text(WIDTH / 2, HEIGHT - MARGIN.bottom + 34, "time [s]", { anchor: "middle", size: 11 });
  canvas.text(16, MARGIN.top - 10, yLabel, { size: 11 });

  const colors = seriesColors(series);
  series.forEach((s, index) => {
    const pts = s.points
      .filter((p) => Number.isFinite(p.value))
      .map((p): [number, number] => [sx(p.time), sy(p.value)]);
    if (pts.length > 0) {
      canvas.polyline(pts, colors[index]!, s.algorithm === "classic" ? 2.5 : 1.5);
    }
  });

  const legendY = HEIGHT - MARGIN.bottom + 44;
  series.forEach((s, index) => {
    const x = MARGIN.left + (index % 3) * 190;
    const y = legendY + Math.floor(index / 3) * 14;
    canvas.rect({ x, y: y - 8, width: 12, height: 8 }, colors[index]!);
    canvas.text(x + 16, y, seriesLabel(s), { size: 9 });
  });
  return canvas.render();
}

export function renderTimeseries(
  frame: ResultFrame,
  metric: Metric,
): Map<string, string> {
  if (!METRICS.includes(metric)) {
    throw new PlotError(`unknown metric '${metric}' (choose from ${METRICS.join(", ")})`);
  }
  const figures = new Map<string, string>();
  for (const scenario of frame.scenarios()) {
    for (const speed of frame.speeds(scenario)) {
      const series = timeseries(frame, scenario, speed, metric);
      if (series.length === 0) continue; // facet without data is omitted
      const name = `${scenario}_${metric}_v${fmt(speed)}.svg`;
      figures.set(name, drawTimeseries(series, `${scenario}: ${metric} (speed ${fmt(speed)} m/s)`, metric));
    }
  }
  return figures;
}

const PANEL_TITLES: Record<BarPanel["metric"], string> = {
  mean_error: "error",
  mean_rounds: "cost (rounds)",
  stdev_rounds: "round-count spread",
};

export function renderBars(frame: ResultFrame): Map<string, string> {
  const figures = new Map<string, string>();
  for (const scenario of frame.scenarios()) {
    const panels = barPanels(frame, scenario);
    if (panels.every((p) => p.epsilons.length === 0)) continue;
    const panelHeight = 250;
    const canvas = new SvgCanvas(WIDTH, panelHeight * panels.length + 40);
    canvas.text(WIDTH / 2, 18, `${scenario}: reactive variants at end of run`, {
      size: 14,
      anchor: "middle",
    });
    panels.forEach((panel, panelIndex) => {
      const top = 30 + panelIndex * panelHeight;
      const bottom = top + panelHeight - 60;
      const left = MARGIN.left;
      const right = WIDTH - MARGIN.right;
      const finite = panel.values.flat().filter((v) => Number.isFinite(v));
      const vHi = Math.max(...finite, 1e-9);
      const sy = scale(0, vHi, bottom, top + 18);
      canvas.text(left, top + 8, PANEL_TITLES[panel.metric], { size: 12 });
      canvas.line(left, bottom, right, bottom, "#333");
      for (const v of ticks(0, vHi, 4)) {
        canvas.text(left - 6, sy(v) + 3, fmt(v), { anchor: "end", size: 9 });
      }
      const groupWidth = (right - left) / Math.max(panel.epsilons.length, 1);
      const barWidth = (groupWidth * 0.8) / Math.max(panel.lambdaInvs.length, 1);
      panel.epsilons.forEach((epsilon, ei) => {
        const groupX = left + ei * groupWidth + groupWidth * 0.1;
        panel.lambdaInvs.forEach((lambdaInv, li) => {
          const value = panel.values[ei]?.[li];
          if (value === undefined || !Number.isFinite(value)) return;
          const y = sy(value);
          canvas.rect(
            { x: groupX + li * barWidth, y, width: barWidth * 0.92, height: bottom - y },
            lambdaShade(li, panel.lambdaInvs.length),
          );
        });
        canvas.text(groupX + groupWidth * 0.4, bottom + 14, `eps=${fmt(epsilon)}`, {
          anchor: "middle",
          size: 9,
        });
      });
      if (panelIndex === 0) {
        panel.lambdaInvs.forEach((lambdaInv, li) => {
          const x = left + li * 150;
          canvas.rect({ x, y: bottom + 24, width: 12, height: 8 }, lambdaShade(li, panel.lambdaInvs.length));
          canvas.text(x + 16, bottom + 32, `lam=${fmt(lambdaInv)}`, { size: 9 });
        });
      }
    });
    figures.set(`${scenario}_bars.svg`, canvas.render());
  }
  return figures;
}

/** Latency shades: the lower the latency, the darker the bar. */
export function lambdaShade(index: number, total: number): string {
  const lightness = 25 + (50 * index) / Math.max(total - 1, 1);
  return shade(20, lightness, 70);
}

/** Lightness of every stroke/fill in an SVG body, for styling assertions. */
export function strokeLightnesses(svg: string): number[] {
  const out: number[] = [];
  const pattern = /(?:stroke|fill)="(hsl\([^"]+\))"/g;
  let match;
  while ((match = pattern.exec(svg)) !== null) {
    out.push(lightnessOf(match[1]!));
  }
  return out;
}
