#!/usr/bin/env node
/** plot-errors --in <run.csv> --out <figure.svg> [--linear-y] [--log-x] */

import { parseArgs, runCli } from "./cliCommon.js";
import { plotErrors } from "./plotErrors.js";

runCli(() => {
  const usage = "usage: plot-errors --in <run.csv> --out <figure.svg> [--linear-y] [--log-x]";
  const args = parseArgs(process.argv.slice(2), usage);
  const curves = plotErrors({
    input: args.input,
    output: args.output,
    logY: !args.flags.has("linear-y"),
    logX: args.flags.has("log-x"),
  });
  for (const curve of curves) {
    console.error(
      `${curve.policy}: final median ${curve.finalMedian.toExponential(3)}, ` +
        `tail slope ${curve.slope.toFixed(3)}`
    );
  }
});
