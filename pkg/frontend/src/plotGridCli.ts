#!/usr/bin/env node
/** plot-grid --in <grid.csv> --out <figure.svg> */

import { parseArgs, runCli } from "./cliCommon.js";
import { plotGrid } from "./plotGrid.js";

runCli(() => {
  const usage = "usage: plot-grid --in <grid.csv> --out <figure.svg>";
  const args = parseArgs(process.argv.slice(2), usage);
  const figure = plotGrid({ input: args.input, output: args.output });
  const worst = Math.max(...figure.convergedDiffs.map(Math.abs));
  console.error(
    `${figure.cells.length} cells; max |relative difference| at top budget: ` +
      `${(100 * worst).toFixed(1)}%`
  );
});
