/**
 * Readers for the identification harness CSV schemas.
 *
 * Run CSV:  seed,policy,t,sq_error,plan_seconds,energy  (one row per step)
 * Grid CSV: policy,n_grad,T,c,eps_median,eps_mean,n_trials (one row per cell)
 *
 * Lines starting with '#' are header comments emitted by the harness.
 */

import { readFileSync } from "fs";

export const RUN_COLUMNS = [
  "seed",
  "policy",
  "t",
  "sq_error",
  "plan_seconds",
  "energy",
] as const;

export const GRID_COLUMNS = [
  "policy",
  "n_grad",
  "T",
  "c",
  "eps_median",
  "eps_mean",
  "n_trials",
] as const;

export interface RunRow {
  seed: number;
  policy: string;
  t: number;
  sqError: number;
  planSeconds: number;
  energy: number;
}

export interface GridRow {
  policy: string;
  nGrad: number;
  T: number;
  c: number;
  epsMedian: number;
  epsMean: number;
  nTrials: number;
}

export class SchemaError extends Error {}

function checkHeader(got: string[], expected: readonly string[], path: string): void {
  if (got.length !== expected.length || got.some((c, i) => c !== expected[i])) {
    const missing = expected.filter((c) => !got.includes(c));
    const extra = got.filter((c) => !expected.includes(c));
    throw new SchemaError(
      `${path}: unexpected columns [${got.join(",")}]; ` +
        `missing [${missing.join(",")}], unexpected [${extra.join(",")}]`
    );
  }
}

function dataLines(path: string): string[] {
  const text = readFileSync(path, "utf-8");
  return text
    .split("\n")
    .filter((line) => line.length > 0 && !line.startsWith("#"));
}

export function readRunCsv(path: string): RunRow[] {
  const lines = dataLines(path);
  if (lines.length === 0) {
    throw new SchemaError(`${path}: empty CSV`);
  }
  checkHeader(lines[0].split(","), RUN_COLUMNS, path);
  const rows: RunRow[] = [];
  for (const line of lines.slice(1)) {
    const f = line.split(",");
    const t = parseInt(f[2], 10);
    if (t < 0) continue; // failed-trial marker row
    rows.push({
      seed: parseInt(f[0], 10),
      policy: f[1],
      t,
      sqError: parseFloat(f[3]),
      planSeconds: parseFloat(f[4]),
      energy: parseFloat(f[5]),
    });
  }
  if (rows.length === 0) {
    throw new SchemaError(`${path}: no data rows`);
  }
  return rows;
}

export function readGridCsv(path: string): GridRow[] {
  const lines = dataLines(path);
  if (lines.length === 0) {
    throw new SchemaError(`${path}: empty CSV`);
  }
  checkHeader(lines[0].split(","), GRID_COLUMNS, path);
  const rows = lines.slice(1).map((line) => {
    const f = line.split(",");
    return {
      policy: f[0],
      nGrad: parseInt(f[1], 10),
      T: parseInt(f[2], 10),
      c: parseFloat(f[3]),
      epsMedian: parseFloat(f[4]),
      epsMean: parseFloat(f[5]),
      nTrials: parseInt(f[6], 10),
    };
  });
  if (rows.length === 0) {
    throw new SchemaError(`${path}: no data rows`);
  }
  return rows;
}
