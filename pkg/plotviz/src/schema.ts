/**
 * File formats written by the training runs.
 *
 * A run directory contains:
 *   run.json       {schema_version, method, seed, ...}
 *   evals.jsonl    one JSON record per evaluation: {v, type:"eval", round,
 *                  goal_set, n_episodes, success_rate, per_goal:[...]}
 *   snapshots/*.csv  goal snapshots: round,g0,g1[,g2...],regret,round_proposed
 */

export const SCHEMA_VERSION = 1;

export interface RunMeta {
  schema_version: number;
  method: string;
  seed: number;
  [key: string]: unknown;
}

export interface EvalRecord {
  v: number;
  type: "eval";
  round: number;
  goal_set: string;
  n_episodes: number;
  success_rate: number;
}

export interface GoalSnapshotRow {
  round: number;
  goal: number[];
  regret: number;
  roundProposed: number;
}

export interface GoalSnapshot {
  goalDim: number;
  rows: GoalSnapshotRow[];
}

export class SchemaError extends Error {}

export function parseRunMeta(text: string, where: string): RunMeta {
  let meta: RunMeta;
  try {
    meta = JSON.parse(text) as RunMeta;
  } catch (e) {
    throw new SchemaError(`${where}: run.json is not valid JSON (${e})`);
  }
  if (meta.schema_version !== SCHEMA_VERSION) {
    throw new SchemaError(
      `${where}: schema version ${meta.schema_version} does not match expected ${SCHEMA_VERSION}`,
    );
  }
  if (typeof meta.method !== "string" || typeof meta.seed !== "number") {
    throw new SchemaError(`${where}: run.json missing method or seed`);
  }
  return meta;
}

export function parseEvalRecords(text: string, where: string): EvalRecord[] {
  const records: EvalRecord[] = [];
  const lines = text.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (!line) continue;
    let rec: EvalRecord;
    try {
      rec = JSON.parse(line) as EvalRecord;
    } catch (e) {
      throw new SchemaError(`${where}:${i + 1}: invalid JSON (${e})`);
    }
    if (rec.type !== "eval") continue;
    if (rec.v !== SCHEMA_VERSION) {
      throw new SchemaError(
        `${where}:${i + 1}: record schema version ${rec.v} does not match ${SCHEMA_VERSION}`,
      );
    }
    if (
      typeof rec.round !== "number" ||
      typeof rec.goal_set !== "string" ||
      typeof rec.success_rate !== "number"
    ) {
      throw new SchemaError(`${where}:${i + 1}: malformed eval record`);
    }
    records.push(rec);
  }
  return records;
}

export function parseGoalSnapshot(text: string, where: string): GoalSnapshot {
  const lines = text.split("\n").filter((l) => l.trim().length > 0);
  if (lines.length === 0) {
    throw new SchemaError(`${where}: empty snapshot file (no header)`);
  }
  const header = lines[0].split(",");
  const goalCols: number[] = [];
  header.forEach((h, i) => {
    if (/^g\d+$/.test(h)) goalCols.push(i);
  });
  const roundCol = header.indexOf("round");
  const regretCol = header.indexOf("regret");
  const proposedCol = header.indexOf("round_proposed");
  if (roundCol < 0 || regretCol < 0 || proposedCol < 0 || goalCols.length === 0) {
    throw new SchemaError(`${where}: snapshot header ${lines[0]} is not a goal snapshot`);
  }
  const rows: GoalSnapshotRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== header.length) {
      throw new SchemaError(`${where}:${i + 1}: expected ${header.length} cells`);
    }
    rows.push({
      round: Number(cells[roundCol]),
      goal: goalCols.map((c) => Number(cells[c])),
      regret: Number(cells[regretCol]),
      roundProposed: Number(cells[proposedCol]),
    });
  }
  return { goalDim: goalCols.length, rows };
}
