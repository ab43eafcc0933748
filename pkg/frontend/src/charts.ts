// Live metric charts: pure geometry plus an SVG string renderer. The
// three chart specs are a direct pass-through of the /metrics payload —
// the view never recomputes or rescales the values themselves.

import { MetricsJson } from "./types.js";

export interface ChartSpec {
  title: string;
  color: string;
  values: number[];
}

export interface ChartPoint {
  x: number;
  y: number;
  value: number;
}

export interface ChartTick {
  offset: number; // x for x-ticks, y for y-ticks
  label: string;
}

export interface ChartGeometry {
  width: number;
  height: number;
  plot: { left: number; top: number; right: number; bottom: number };
  points: ChartPoint[];
  polyline: string; // "x1,y1 x2,y2 ..."; empty for an empty series
  xTicks: ChartTick[];
  yTicks: ChartTick[];
}

const PLOT_PADDING = { left: 34, top: 10, right: 8, bottom: 20 };
const MAX_X_TICKS = 8;

export function computeChart(values: number[], width = 240, height = 150): ChartGeometry {
  const plot = {
    left: PLOT_PADDING.left,
    top: PLOT_PADDING.top,
    right: width - PLOT_PADDING.right,
    bottom: height - PLOT_PADDING.bottom,
  };
  const plotWidth = plot.right - plot.left;
  const plotHeight = plot.bottom - plot.top;

  // All three series are nonnegative, so the y axis always starts at 0.
  const yMax = values.length > 0 ? Math.max(...values, 0) : 0;
  const ySpan = yMax > 0 ? yMax : 1;

  const xFor = (i: number): number => {
    if (values.length <= 1) {
      return plot.left + plotWidth / 2;
    }
    return plot.left + (i * plotWidth) / (values.length - 1);
  };
  const yFor = (v: number): number => plot.bottom - (v / ySpan) * plotHeight;

  const points: ChartPoint[] = values.map((v, i) => ({
    x: round2(xFor(i)),
    y: round2(yFor(v)),
    value: v,
  }));

  const xTicks: ChartTick[] = [];
  const stride = Math.max(1, Math.ceil(values.length / MAX_X_TICKS));
  for (let i = 0; i < values.length; i += stride) {
    xTicks.push({ offset: round2(xFor(i)), label: String(i) });
  }

  const yTicks: ChartTick[] =
    values.length === 0
      ? []
      : [
          { offset: round2(yFor(0)), label: formatValue(0) },
          { offset: round2(yFor(ySpan / 2)), label: formatValue(ySpan / 2) },
          { offset: round2(yFor(ySpan)), label: formatValue(ySpan) },
        ];

  return {
    width: width,
    height: height,
    plot: plot,
    points: points,
    polyline: points.map((p) => `${p.x},${p.y}`).join(" "),
    xTicks: xTicks,
    yTicks: yTicks,
  };
}

// Exactly three charts, one per metric series, values passed through.
export function metricCharts(metrics: MetricsJson): ChartSpec[] {
  return [
    { title: "Examples taught", color: "#64b5f6", values: metrics.examples_taught },
    { title: "Per-turn complexity", color: "#81c784", values: metrics.per_turn_complexity },
    { title: "Normalized episode length", color: "#ffb74d", values: metrics.normalized_episode_length },
  ];
}

export function renderChartSvg(spec: ChartSpec, width = 240, height = 150): string {
  const g = computeChart(spec.values, width, height);
  const parts: string[] = [];
  parts.push(
    `<svg class="chart" viewBox="0 0 ${g.width} ${g.height}" width="${g.width}" height="${g.height}" role="img">`,
  );
  parts.push(`<text class="chart-title" x="${g.plot.left}" y="${g.plot.top}">${spec.title}</text>`);
  // Axes are always drawn, even for an empty session.
  parts.push(
    `<line class="chart-axis" x1="${g.plot.left}" y1="${g.plot.top}" x2="${g.plot.left}" y2="${g.plot.bottom}"/>`,
  );
  parts.push(
    `<line class="chart-axis" x1="${g.plot.left}" y1="${g.plot.bottom}" x2="${g.plot.right}" y2="${g.plot.bottom}"/>`,
  );
  for (const tick of g.yTicks) {
    parts.push(
      `<text class="chart-tick" text-anchor="end" x="${g.plot.left - 4}" y="${tick.offset + 3}">${tick.label}</text>`,
    );
  }
  for (const tick of g.xTicks) {
    parts.push(
      `<text class="chart-tick" text-anchor="middle" x="${tick.offset}" y="${g.plot.bottom + 14}">${tick.label}</text>`,
    );
  }
  if (g.polyline !== "") {
    parts.push(
      `<polyline class="chart-line" fill="none" stroke="${spec.color}" stroke-width="2" points="${g.polyline}"/>`,
    );
    for (const p of g.points) {
      parts.push(
        `<circle class="chart-dot" cx="${p.x}" cy="${p.y}" r="3" fill="${spec.color}">` +
          `<title>${formatValue(p.value)}</title></circle>`,
      );
    }
  }
  parts.push("</svg>");
  return parts.join("");
}

export function formatValue(value: number): string {
  if (Number.isInteger(value)) {
    return String(value);
  }
  return value.toFixed(2);
}

function round2(value: number): number {
  return Math.round(value * 100) / 100;
}
