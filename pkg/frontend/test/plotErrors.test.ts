import { mkdtempSync, readFileSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";

import { beforeAll, describe, expect, it } from "vitest";

import { parseArgs } from "../src/cliCommon.js";
import { readRunCsv, RUN_COLUMNS } from "../src/csv.js";
import { buildErrorCurves, plotErrors } from "../src/plotErrors.js";

let dir: string;

beforeAll(() => {
  dir = mkdtempSync(join(tmpdir(), "sysid-plots-"));
});

function plantedCsv(path: string, horizon = 120, seeds = 8): void {
  // squared error exactly 1/(t+1) for every seed: a log-log line of slope -1
  const lines = ["# config: planted", RUN_COLUMNS.join(",")];
  for (let seed = 0; seed < seeds; seed++) {
    for (let t = 0; t < horizon; t++) {
      lines.push(`${seed},planted,${t},${1 / (t + 1)},0.0,${t + 1}`);
    }
  }
  writeFileSync(path, lines.join("\n") + "\n", "utf-8");
}

describe("plot-errors", () => {
  it("fits slope -1 on a planted 1/T dataset and renders an SVG", () => {
    const input = join(dir, "planted.csv");
    const output = join(dir, "planted.svg");
    plantedCsv(input);
    const curves = plotErrors({ input, output, logX: true, logY: true });
    expect(curves).toHaveLength(1);
    expect(curves[0].slope).toBeCloseTo(-1, 2);
    expect(Math.abs(curves[0].slope + 1)).toBeLessThanOrEqual(0.01);
    const svg = readFileSync(output, "utf-8");
    expect(svg).toContain("<svg");
    expect(svg).toContain("polyline");
  });

  it("orders the legend by final median error", () => {
    const input = join(dir, "two.csv");
    const lines = ["# config: two", RUN_COLUMNS.join(",")];
    for (let seed = 0; seed < 4; seed++) {
      for (let t = 0; t < 10; t++) {
        lines.push(`${seed},worse,${t},${2 / (t + 1)},0.0,1`);
        lines.push(`${seed},better,${t},${1 / (t + 1)},0.0,1`);
      }
    }
    writeFileSync(input, lines.join("\n") + "\n", "utf-8");
    const curves = buildErrorCurves(readRunCsv(input));
    expect(curves.map((c) => c.policy)).toEqual(["better", "worse"]);
  });

  it("IQR band brackets the median", () => {
    const input = join(dir, "spread.csv");
    const lines = ["# config: spread", RUN_COLUMNS.join(",")];
    for (let seed = 0; seed < 9; seed++) {
      for (let t = 0; t < 5; t++) {
        lines.push(`${seed},p,${t},${(seed + 1) / (t + 1)},0.0,1`);
      }
    }
    writeFileSync(input, lines.join("\n") + "\n", "utf-8");
    const [curve] = buildErrorCurves(readRunCsv(input));
    for (let j = 0; j < curve.t.length; j++) {
      expect(curve.q25[j]).toBeLessThanOrEqual(curve.median[j]);
      expect(curve.median[j]).toBeLessThanOrEqual(curve.q75[j]);
    }
  });

  it("rejects an empty CSV", () => {
    const input = join(dir, "empty.csv");
    writeFileSync(input, "", "utf-8");
    expect(() => plotErrors({ input, output: join(dir, "e.svg") })).toThrow(/empty/);
  });

  it("reports a column diff on schema mismatch", () => {
    const input = join(dir, "bad.csv");
    writeFileSync(input, "a,b,c\n1,2,3\n", "utf-8");
    expect(() => readRunCsv(input)).toThrow(/missing.*sq_error/);
  });

  it("rejects non-svg outputs and missing arguments", () => {
    expect(() => parseArgs(["--in", "x.csv", "--out", "x.png"], "usage")).toThrow(/svg/);
    expect(() => parseArgs(["--in", "x.csv"], "usage")).toThrow(/required/);
  });
});
