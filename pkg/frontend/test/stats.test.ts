import { describe, expect, it } from "vitest";

import { fitLine, logLogSlope, median, quantile } from "../src/stats.js";

describe("order statistics", () => {
  it("median of odd and even lists", () => {
    expect(median([3, 1, 2])).toBe(2);
    expect(median([4, 1, 2, 3])).toBe(2.5);
  });

  it("quartiles interpolate", () => {
    expect(quantile([0, 1, 2, 3], 0.25)).toBeCloseTo(0.75);
    expect(quantile([0, 1, 2, 3], 0.75)).toBeCloseTo(2.25);
  });
});

describe("line fits", () => {
  it("recovers an exact line", () => {
    const xs = [1, 2, 3, 4];
    const ys = xs.map((x) => 2 * x - 1);
    const fit = fitLine(xs, ys);
    expect(fit.slope).toBeCloseTo(2, 12);
    expect(fit.intercept).toBeCloseTo(-1, 12);
  });

  it("log-log slope of a power law", () => {
    const xs = [10, 20, 40, 80, 160];
    const ys = xs.map((x) => 5 / x);
    expect(logLogSlope(xs, ys)).toBeCloseTo(-1, 10);
  });
});
