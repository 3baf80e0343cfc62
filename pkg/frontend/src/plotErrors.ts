/**
 * Error-versus-time curves from a harness run CSV: one curve per policy,
 * median over seeds with a shaded interquartile band.
 */

import { writeFileSync } from "fs";

import { RunRow, readRunCsv } from "./csv.js";
import { logLogSlope, median, quantile } from "./stats.js";
import { PALETTE, Svg, drawAxes, linearScale, logScale } from "./svg.js";

export interface ErrorCurve {
  policy: string;
  t: number[];
  median: number[];
  q25: number[];
  q75: number[];
  finalMedian: number;
  /** log-log slope of the median curve over its second half */
  slope: number;
}

export interface ErrorPlotSpec {
  input: string;
  output: string;
  logX?: boolean;
  logY?: boolean;
  title?: string;
}

export function buildErrorCurves(rows: RunRow[]): ErrorCurve[] {
  const byPolicy = new Map<string, Map<number, number[]>>();
  for (const row of rows) {
    if (!byPolicy.has(row.policy)) byPolicy.set(row.policy, new Map());
    const byT = byPolicy.get(row.policy)!;
    if (!byT.has(row.t)) byT.set(row.t, []);
    byT.get(row.t)!.push(row.sqError);
  }
  const curves: ErrorCurve[] = [];
  for (const [policy, byT] of byPolicy) {
    const ts = [...byT.keys()].sort((a, b) => a - b);
    const med = ts.map((t) => median(byT.get(t)!));
    const q25 = ts.map((t) => quantile(byT.get(t)!, 0.25));
    const q75 = ts.map((t) => quantile(byT.get(t)!, 0.75));
    const tail = ts.map((t, i) => [t + 1, med[i]] as const).filter(([t]) => t >= ts.length / 2);
    curves.push({
      policy,
      t: ts,
      median: med,
      q25,
      q75,
      finalMedian: med[med.length - 1],
      slope: logLogSlope(
        tail.map(([t]) => t),
        tail.map(([, e]) => e)
      ),
    });
  }
  // legend ordered by final median error, best first
  curves.sort((a, b) => a.finalMedian - b.finalMedian);
  return curves;
}

export function renderErrorPlot(curves: ErrorCurve[], spec: ErrorPlotSpec): string {
  const width = 640;
  const height = 420;
  const frame = { left: 64, right: width - 20, top: 28, bottom: height - 48 };

  const allT = curves.flatMap((c) => c.t.map((t) => t + 1));
  const allE = curves.flatMap((c) => c.q25.concat(c.q75)).filter((e) => e > 0);
  const tLo = Math.min(...allT);
  const tHi = Math.max(...allT);
  const eLo = Math.min(...allE);
  const eHi = Math.max(...allE);

  const x = spec.logX
    ? logScale(tLo, tHi, frame.left, frame.right)
    : linearScale(tLo, tHi, frame.left, frame.right);
  const y = spec.logY
    ? logScale(eLo * 0.8, eHi * 1.25, frame.bottom, frame.top)
    : linearScale(0, eHi * 1.05, frame.bottom, frame.top);

  const svg = new Svg(width, height);
  drawAxes(svg, { x, y, ...frame }, "t", "squared error");
  if (spec.title) svg.text(frame.left, 16, spec.title, { size: 13 });

  curves.forEach((curve, i) => {
    const color = PALETTE[i % PALETTE.length];
    const floor = spec.logY ? eLo * 0.8 : 0;
    const band: Array<[number, number]> = [
      ...curve.t.map((t, j) => [x(t + 1), y(Math.max(curve.q75[j], floor))] as [number, number]),
      ...[...curve.t.keys()]
        .reverse()
        .map((j) => [x(curve.t[j] + 1), y(Math.max(curve.q25[j], floor))] as [number, number]),
    ];
    svg.polygon(band, color);
    svg.polyline(
      curve.t.map((t, j) => [x(t + 1), y(Math.max(curve.median[j], floor))]),
      color
    );
    const ly = frame.top + 14 * (i + 1);
    svg.line(frame.right - 150, ly - 4, frame.right - 130, ly - 4, color, 2);
    svg.text(frame.right - 125, ly, `${curve.policy} (${curve.finalMedian.toExponential(2)})`, {
      size: 10,
    });
  });
  return svg.render();
}

export function plotErrors(spec: ErrorPlotSpec): ErrorCurve[] {
  const rows = readRunCsv(spec.input);
  const curves = buildErrorCurves(rows);
  writeFileSync(spec.output, renderErrorPlot(curves, spec), "utf-8");
  return curves;
}
