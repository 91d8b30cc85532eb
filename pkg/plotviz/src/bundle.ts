/**
 * A RunBundle is a set of run directories for the same method (different
 * seeds), loaded and cross-validated. A bundle directory is the --out
 * directory of training runs, holding run-<seed>/ subdirectories.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { EvalRecord, RunMeta, SchemaError, parseEvalRecords, parseRunMeta } from "./schema.js";

export interface LoadedRun {
  dir: string;
  meta: RunMeta;
  evals: EvalRecord[];
}

export interface RunBundle {
  dir: string;
  method: string;
  runs: LoadedRun[];
}

export function loadRun(runDir: string): LoadedRun {
  const metaPath = path.join(runDir, "run.json");
  const evalsPath = path.join(runDir, "evals.jsonl");
  if (!fs.existsSync(metaPath) || !fs.existsSync(evalsPath)) {
    throw new SchemaError(`${runDir}: not a run directory (missing run.json or evals.jsonl)`);
  }
  const meta = parseRunMeta(fs.readFileSync(metaPath, "utf8"), metaPath);
  const evals = parseEvalRecords(fs.readFileSync(evalsPath, "utf8"), evalsPath);
  return { dir: runDir, meta, evals };
}

export function loadBundle(bundleDir: string): RunBundle {
  if (!fs.existsSync(bundleDir)) {
    throw new SchemaError(`${bundleDir}: bundle directory does not exist`);
  }
  const entries = fs
    .readdirSync(bundleDir)
    .filter((name) => name.startsWith("run-"))
    .sort();
  const runs = entries
    .map((name) => path.join(bundleDir, name))
    .filter((p) => fs.statSync(p).isDirectory())
    .map(loadRun);
  if (runs.length === 0) {
    throw new SchemaError(`${bundleDir}: bundle is empty (no run-*/ directories with logs)`);
  }
  const methods = new Set(runs.map((r) => r.meta.method));
  if (methods.size > 1) {
    throw new SchemaError(
      `${bundleDir}: bundled runs mix methods ${[...methods].sort().join(", ")}`,
    );
  }
  return { dir: bundleDir, method: runs[0].meta.method, runs };
}
