/**
 * End-to-end: drive the identification harness CLI to produce a real
 * (T, n_grad) grid, then render both figures through the built commands.
 */

import { execFileSync, execSync } from "child_process";
import { existsSync, mkdtempSync, readFileSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";

import { beforeAll, describe, expect, it } from "vitest";

import { buildGrid } from "../src/plotGrid.js";
import { readGridCsv } from "../src/csv.js";

const GRID_SEEDS = 150;
const HORIZONS = "60,120";
const GRADIENT_BUDGETS = [1, 10, 120];

let dir: string;
let gridCsv: string;
let runCsv: string;

function harnessConfig(policy: string, nGrad: number): string {
  return [
    "[system]",
    "source = random-ensemble",
    "d = 4",
    "m = 4",
    "b_identity = true",
    "sigma = 0.01",
    "gamma = 1.0",
    "",
    "[run]",
    "mode = known-b",
    `policy = ${policy}`,
    `horizon = ${HORIZONS}`,
    `seeds = ${GRID_SEEDS}`,
    "",
    "[gradient]",
    `n_grad = ${nGrad}`,
    "batch = 50",
    "schedule = 0,10,T/2,T",
    "",
  ].join("\n");
}

beforeAll(() => {
  dir = mkdtempSync(join(tmpdir(), "sysid-e2e-"));
  execSync("npm run build", { cwd: join(__dirname, ".."), stdio: "pipe" });

  const runCsvs: string[] = [];
  for (const [policy, budgets] of [
    ["greedy", [0]],
    ["gradient", GRADIENT_BUDGETS],
  ] as Array<[string, number[]]>) {
    for (const nGrad of budgets) {
      const cfg = join(dir, `${policy}-${nGrad}.cfg`);
      const out = join(dir, `${policy}-${nGrad}.csv`);
      writeFileSync(cfg, harnessConfig(policy, nGrad), "utf-8");
      execFileSync(
        "sysid",
        ["ensemble", "--config", cfg, "--out", out, "--workers", "2"],
        { stdio: "pipe" }
      );
      runCsvs.push(out);
    }
  }
  runCsv = runCsvs[0];
  gridCsv = join(dir, "grid.csv");
  execFileSync("sysid", ["fit-perf", ...runCsvs, "--out", gridCsv], { stdio: "pipe" });
}, 600_000);

describe("real harness grid", () => {
  it("renders the error curves through the built CLI", () => {
    const out = join(dir, "errors.svg");
    execFileSync(
      process.execPath,
      [join(__dirname, "..", "dist", "plotErrorsCli.js"), "--in", runCsv, "--out", out],
      { stdio: "pipe" }
    );
    expect(existsSync(out)).toBe(true);
    expect(readFileSync(out, "utf-8")).toContain("</svg>");
  });

  it("renders the grid and bounds the converged difference panel by 15%", () => {
    const out = join(dir, "grid.svg");
    execFileSync(
      process.execPath,
      [join(__dirname, "..", "dist", "plotGridCli.js"), "--in", gridCsv, "--out", out],
      { stdio: "pipe" }
    );
    expect(existsSync(out)).toBe(true);

    const figure = buildGrid(readGridCsv(gridCsv));
    const budgets = [...new Set(figure.cells.map((c) => c.nGrad))];
    expect(budgets.length).toBe(GRADIENT_BUDGETS.length);
    expect(figure.convergedDiffs.length).toBeGreaterThan(0);
    for (const diff of figure.convergedDiffs) {
      expect(Math.abs(diff)).toBeLessThanOrEqual(0.15);
    }
  });
}, 600_000);
