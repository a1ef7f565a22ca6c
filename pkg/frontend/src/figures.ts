/** The five standard figure kinds rendered from balpha CSV artifacts. */

import { parseCsv, Row, SchemaError } from "./csv.js";
import { FitResult, loglogFit } from "./fit.js";
import { fmt, SvgChart } from "./svg.js";

export type FigureKind =
  | "uniformity"
  | "tau-law"
  | "refinement"
  | "smoothing"
  | "alpha-limit";

export interface RenderResult {
  svg: string;
  /** present for the fitting kinds (tau-law, refinement) */
  fit?: FitResult;
}

const COLORS = ["#1f6fb4", "#d1495b", "#3a7d44", "#8d6a9f", "#c97b2d"];

function range(vals: number[], padFrac = 0.08): [number, number] {
  const lo = Math.min(...vals);
  const hi = Math.max(...vals);
  const pad = (hi - lo || Math.abs(hi) || 1) * padFrac;
  return [lo - pad, hi + pad];
}

function logRange(vals: number[]): [number, number] {
  const lo = Math.min(...vals);
  const hi = Math.max(...vals);
  return [lo / 1.3, hi * 1.3];
}

function fitLine(chart: SvgChart, xs: number[], fit: FitResult): void {
  const lo = Math.min(...xs);
  const hi = Math.max(...xs);
  const ylo = Math.exp(fit.intercept + fit.slope * Math.log(lo));
  const yhi = Math.exp(fit.intercept + fit.slope * Math.log(hi));
  if (fit.band95 > 0) {
    const mx = Math.sqrt(lo * hi);
    const at = (x: number, s: number) =>
      Math.exp(
        fit.intercept +
          fit.slope * Math.log(mx) +
          s * (Math.log(x) - Math.log(mx)),
      );
    chart.band(
      [lo, hi],
      [at(lo, fit.slope + fit.band95), at(hi, fit.slope - fit.band95)],
      [at(lo, fit.slope - fit.band95), at(hi, fit.slope + fit.band95)],
      COLORS[1],
    );
  }
  chart.polyline([lo, hi], [ylo, yhi], COLORS[1], 1.5, "6 3");
  chart.label(
    `slope ${fmt(fit.slope)} ± ${fmt(fit.band95)}`,
    chart.frame.left + 12,
    chart.frame.top + 14,
    COLORS[1],
  );
}

export function renderTauLaw(text: string): RenderResult {
  const rows = parseCsv(text, ["tau", "alpha", "h1_terminal"]);
  // the fit uses the rows of the first alpha value in the file, matching
  // the CLI's own tau_law.fit.json
  const firstAlpha = rows[0].alpha;
  const fitRows = rows.filter((r) => r.alpha === firstAlpha);
  const fit = loglogFit(
    fitRows.map((r) => r.tau),
    fitRows.map((r) => r.h1_terminal),
  );
  const chart = new SvgChart(
    "terminal H1 remainder vs window size",
    "tau",
    "|r(tau)| (H1)",
    logRange(rows.map((r) => r.tau)),
    logRange(rows.map((r) => r.h1_terminal)),
    { logX: true, logY: true },
  );
  fitLine(chart, fitRows.map((r) => r.tau), fit);
  const alphas = [...new Set(rows.map((r) => r.alpha))];
  alphas.forEach((a, i) => {
    const sub = rows.filter((r) => r.alpha === a);
    chart.scatter(
      sub.map((r) => r.tau),
      sub.map((r) => r.h1_terminal),
      COLORS[i % COLORS.length],
    );
    chart.label(
      `alpha = ${fmt(a)}`,
      chart.frame.left + 12,
      chart.frame.top + 30 + 14 * i,
      COLORS[i % COLORS.length],
    );
  });
  return { svg: chart.toString(), fit };
}

export function renderRefinement(text: string): RenderResult {
  const rows = parseCsv(text, ["n", "dx", "dt", "terminal_c0_error"]);
  const fit = loglogFit(
    rows.map((r) => r.dx),
    rows.map((r) => r.terminal_c0_error),
  );
  const chart = new SvgChart(
    "terminal error under mesh refinement",
    "dx",
    "terminal C0 error",
    logRange(rows.map((r) => r.dx)),
    logRange(rows.map((r) => r.terminal_c0_error)),
    { logX: true, logY: true },
  );
  fitLine(chart, rows.map((r) => r.dx), fit);
  chart.scatter(
    rows.map((r) => r.dx),
    rows.map((r) => r.terminal_c0_error),
    COLORS[0],
  );
  chart.polyline(
    rows.map((r) => r.dx),
    rows.map((r) => r.terminal_c0_error),
    COLORS[0],
    1.0,
  );
  return { svg: chart.toString(), fit };
}

export function renderAlphaLimit(text: string): RenderResult {
  const rows = parseCsv(text, ["alpha", "distance"]);
  const chart = new SvgChart(
    "distance to the alpha -> 0 reference run",
    "alpha",
    "sup-in-time L2 distance",
    logRange(rows.map((r) => r.alpha)),
    logRange(rows.map((r) => r.distance)),
    { logX: true, logY: true },
  );
  const sorted = [...rows].sort((a, b) => a.alpha - b.alpha);
  chart.polyline(
    sorted.map((r) => r.alpha),
    sorted.map((r) => r.distance),
    COLORS[0],
  );
  chart.scatter(
    sorted.map((r) => r.alpha),
    sorted.map((r) => r.distance),
    COLORS[0],
  );
  return { svg: chart.toString() };
}

export function renderSmoothing(text: string): RenderResult {
  const rows = parseCsv(text, ["t", "h1", "h2", "h3", "c2"]);
  const series: (keyof Row & string)[] = ["h1", "h2", "h3", "c2"];
  const all = rows.flatMap((r) => series.map((s) => r[s]));
  const positive = all.filter((v) => v > 0);
  const floor = positive.length ? Math.min(...positive) : 1e-16;
  const chart = new SvgChart(
    "regularity histories of the free run",
    "t",
    "discrete norm",
    range(rows.map((r) => r.t), 0.02),
    logRange([floor, Math.max(...all, floor * 10)]),
    { logY: true },
  );
  series.forEach((s, i) => {
    const pts = rows.filter((r) => r[s] > 0);
    chart.polyline(
      pts.map((r) => r.t),
      pts.map((r) => r[s]),
      COLORS[i % COLORS.length],
    );
    chart.label(
      s,
      chart.frame.left + 12,
      chart.frame.top + 14 + 14 * i,
      COLORS[i % COLORS.length],
    );
  });
  return { svg: chart.toString() };
}

export function renderUniformity(text: string): RenderResult {
  const rows = parseCsv(text, ["alpha", "p_c0", "traces_c1", "terminal_error"]);
  const series = ["p_c0", "traces_c1"] as const;
  const vals = rows.flatMap((r) => series.map((s) => r[s]));
  const chart = new SvgChart(
    "control norms across the filter parameter",
    "run index (alpha labels below bars)",
    "norm",
    [-0.5, rows.length - 0.5],
    range([0, ...vals], 0.06),
  );
  const w = 0.32;
  rows.forEach((r, i) => {
    series.forEach((s, j) => {
      chart.bar(i - w + j * w, i + j * w - (j === 0 ? 0 : -0) * w, r[s], 0, COLORS[j]);
    });
    chart.label(
      `a=${fmt(r.alpha)}`,
      chart.x.toPx(i) - 18,
      chart.frame.height - chart.frame.bottom + 30,
    );
  });
  series.forEach((s, j) => {
    chart.label(s, chart.frame.left + 12, chart.frame.top + 14 + 14 * j, COLORS[j]);
  });
  const spread = (vals2: number[]) => {
    const lo = Math.min(...vals2);
    const hi = Math.max(...vals2);
    return lo > 0 ? hi / lo : 1;
  };
  chart.label(
    `spreads: p ${fmt(spread(rows.map((r) => r.p_c0)))}, traces ${fmt(
      spread(rows.map((r) => r.traces_c1)),
    )}`,
    chart.frame.left + 12,
    chart.frame.top + 14 + 14 * series.length,
  );
  return { svg: chart.toString() };
}

export function render(kind: FigureKind, text: string): RenderResult {
  switch (kind) {
    case "tau-law":
      return renderTauLaw(text);
    case "refinement":
      return renderRefinement(text);
    case "alpha-limit":
      return renderAlphaLimit(text);
    case "smoothing":
      return renderSmoothing(text);
    case "uniformity":
      return renderUniformity(text);
    default:
      throw new SchemaError(`unknown figure kind '${kind}'`);
  }
}
