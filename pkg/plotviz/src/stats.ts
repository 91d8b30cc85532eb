/**
 * Cross-seed aggregation of evaluation curves. Standard deviation is the
 * population formula (divide by n), matching the sidecar CSV.
 */

import { RunBundle } from "./bundle.js";

export interface CurvePoint {
  round: number;
  mean: number;
  std: number;
  n: number;
}

export function mean(values: number[]): number {
  if (values.length === 0) throw new Error("mean of empty list");
  return values.reduce((a, b) => a + b, 0) / values.length;
}

export function populationStd(values: number[]): number {
  const m = mean(values);
  const variance = values.reduce((a, b) => a + (b - m) * (b - m), 0) / values.length;
  return Math.sqrt(variance);
}

export function successCurve(bundle: RunBundle, goalSet: string): CurvePoint[] {
  const byRound = new Map<number, number[]>();
  for (const run of bundle.runs) {
    for (const rec of run.evals) {
      if (rec.goal_set !== goalSet) continue;
      const bucket = byRound.get(rec.round) ?? [];
      bucket.push(rec.success_rate);
      byRound.set(rec.round, bucket);
    }
  }
  if (byRound.size === 0) {
    throw new Error(`${bundle.dir}: no evaluation records for goal set '${goalSet}'`);
  }
  return [...byRound.entries()]
    .sort((a, b) => a[0] - b[0])
    .map(([round, values]) => ({
      round,
      mean: mean(values),
      std: populationStd(values),
      n: values.length,
    }));
}
