import { describe, expect, it } from "vitest";

import { mean, populationStd } from "../src/stats.js";
import { sidecarCsv } from "../src/plotSuccess.js";
import { CurvePoint } from "../src/stats.js";

describe("cross-seed statistics", () => {
  it("computes mean and population std to 1e-9 on the worked example", () => {
    // Three seeds with rates 0.2 / 0.4 / 0.6 at one round.
    const values = [0.2, 0.4, 0.6];
    expect(mean(values)).toBeCloseTo(0.4, 12);
    // population std = sqrt(((0.2)^2 + 0 + (0.2)^2) / 3)
    const expected = Math.sqrt(0.08 / 3);
    expect(Math.abs(populationStd(values) - expected)).toBeLessThan(1e-9);
    expect(Math.abs(populationStd(values) - 0.16329931618554522)).toBeLessThan(1e-9);
  });

  it("single seed collapses std to zero", () => {
    expect(populationStd([0.7])).toBe(0);
  });

  it("sidecar CSV round-trips the plotted numbers", () => {
    const curves = new Map<string, CurvePoint[]>([
      ["cusp", [{ round: 100, mean: 0.4, std: Math.sqrt(0.08 / 3), n: 3 }]],
    ]);
    const csv = sidecarCsv(curves);
    const lines = csv.trim().split("\n");
    expect(lines[0]).toBe("method,round,mean,std,n");
    const cells = lines[1].split(",");
    expect(cells[0]).toBe("cusp");
    expect(Number(cells[2])).toBeCloseTo(0.4, 12);
    expect(Math.abs(Number(cells[3]) - Math.sqrt(0.08 / 3))).toBeLessThan(1e-9);
  });

  it("rejects empty input", () => {
    expect(() => mean([])).toThrow();
  });
});
