/**
 * Performance heatmap over the (T, computational-rate) grid from a fit-perf
 * grid CSV: a median-error panel for the gradient buckets and a relative
 * difference panel against the greedy baseline (negative means the gradient
 * run beats greedy at that cell).
 */

import { writeFileSync } from "fs";

import { GridRow, SchemaError, readGridCsv } from "./csv.js";
import { Svg, divergingColor, formatTick, sequentialColor } from "./svg.js";

export interface GridPlotSpec {
  input: string;
  output: string;
  basePolicy?: string; // difference baseline, default "greedy"
  title?: string;
}

export interface DiffCell {
  T: number;
  nGrad: number;
  eps: number;
  /** (eps - eps_base) / eps_base at the same horizon */
  relDiff: number;
}

export interface GridFigure {
  cells: DiffCell[];
  /** relative differences of the highest-n_grad (converged) row */
  convergedDiffs: number[];
}

export function buildGrid(rows: GridRow[], basePolicy = "greedy"): GridFigure {
  const base = new Map<number, number>();
  for (const row of rows) {
    if (row.policy === basePolicy) base.set(row.T, row.epsMedian);
  }
  if (base.size === 0) {
    throw new SchemaError(`no rows for baseline policy '${basePolicy}'`);
  }
  const cells: DiffCell[] = [];
  for (const row of rows) {
    if (row.policy === basePolicy) continue;
    const ref = base.get(row.T);
    if (ref === undefined) continue;
    cells.push({
      T: row.T,
      nGrad: row.nGrad,
      eps: row.epsMedian,
      relDiff: (row.epsMedian - ref) / ref,
    });
  }
  if (cells.length === 0) {
    throw new SchemaError("grid has no comparable (T, n_grad) cells");
  }
  const topN = Math.max(...cells.map((c) => c.nGrad));
  return {
    cells,
    convergedDiffs: cells.filter((c) => c.nGrad === topN).map((c) => c.relDiff),
  };
}

export function renderGridPlot(figure: GridFigure, spec: GridPlotSpec): string {
  const ts = [...new Set(figure.cells.map((c) => c.T))].sort((a, b) => a - b);
  const ns = [...new Set(figure.cells.map((c) => c.nGrad))].sort((a, b) => a - b);
  const cellW = 64;
  const cellH = 36;
  const left = 70;
  const top = 40;
  const panelGap = 60;
  const panelW = ts.length * cellW;
  const width = left + panelW * 2 + panelGap + 30;
  const height = top + ns.length * cellH + 60;
  const svg = new Svg(width, height);

  const epsVals = figure.cells.map((c) => c.eps);
  const logLo = Math.log(Math.min(...epsVals));
  const logHi = Math.log(Math.max(...epsVals));
  const span = Math.max(logHi - logLo, 1e-9);

  const cellAt = (T: number, n: number) =>
    figure.cells.find((c) => c.T === T && c.nGrad === n);

  svg.text(left, 20, spec.title ?? "median error over (T, gradient budget)", { size: 13 });
  svg.text(left + panelW + panelGap, 20, "relative difference to baseline", { size: 13 });

  ns.forEach((n, row) => {
    const y = top + (ns.length - 1 - row) * cellH;
    svg.text(left - 8, y + cellH / 2 + 3, `${n}`, { anchor: "end", size: 10 });
    svg.text(left + panelW + panelGap - 8, y + cellH / 2 + 3, `${n}`, {
      anchor: "end",
      size: 10,
    });
    ts.forEach((T, col) => {
      const cell = cellAt(T, n);
      if (!cell) return;
      const x1 = left + col * cellW;
      const x2 = left + panelW + panelGap + col * cellW;
      const shade = (Math.log(cell.eps) - logLo) / span;
      svg.rect(x1, y, cellW - 2, cellH - 2, sequentialColor(shade), `eps=${cell.eps.toExponential(3)}`);
      svg.text(x1 + cellW / 2 - 1, y + cellH / 2 + 3, cell.eps.toExponential(1), {
        anchor: "middle",
        size: 9,
      });
      svg.rect(
        x2, y, cellW - 2, cellH - 2,
        divergingColor(cell.relDiff / 0.25),
        `diff=${(100 * cell.relDiff).toFixed(1)}%`
      );
      svg.text(x2 + cellW / 2 - 1, y + cellH / 2 + 3, `${(100 * cell.relDiff).toFixed(1)}%`, {
        anchor: "middle",
        size: 9,
      });
    });
  });
  ts.forEach((T, col) => {
    for (const x0 of [left, left + panelW + panelGap]) {
      svg.text(x0 + col * cellW + cellW / 2, top + ns.length * cellH + 16, formatTick(T), {
        anchor: "middle",
        size: 10,
      });
    }
  });
  svg.text(left + panelW / 2, height - 18, "T", { anchor: "middle" });
  svg.text(left + panelW + panelGap + panelW / 2, height - 18, "T", { anchor: "middle" });
  svg.text(16, top + (ns.length * cellH) / 2, "n_grad", { anchor: "middle", rotate: -90 });
  return svg.render();
}

export function plotGrid(spec: GridPlotSpec): GridFigure {
  const rows = readGridCsv(spec.input);
  const figure = buildGrid(rows, spec.basePolicy ?? "greedy");
  writeFileSync(spec.output, renderGridPlot(figure, spec), "utf-8");
  return figure;
}
