#!/usr/bin/env node
/**
 * plotviz plot-success --goal-set gid --out curves.svg BUNDLE_DIR [BUNDLE_DIR...]
 * plotviz plot-goals --out goals.svg SNAPSHOT_CSV
 *
 * Bundle directories are training --out directories (holding run-<seed>/).
 */

import * as process from "node:process";

import { loadBundle } from "./bundle.js";
import { plotGoalScatter } from "./plotGoals.js";
import { plotSuccess } from "./plotSuccess.js";
import { SchemaError } from "./schema.js";

interface Parsed {
  flags: Map<string, string>;
  positionals: string[];
}

function parseArgs(argv: string[]): Parsed {
  const flags = new Map<string, string>();
  const positionals: string[] = [];
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg.startsWith("--")) {
      const value = argv[i + 1];
      if (value === undefined) throw new Error(`flag ${arg} needs a value`);
      flags.set(arg.slice(2), value);
      i++;
    } else {
      positionals.push(arg);
    }
  }
  return { flags, positionals };
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    if (command === "plot-success") {
      const { flags, positionals } = parseArgs(rest);
      const out = flags.get("out");
      if (!out) throw new Error("plot-success requires --out <svg path>");
      if (positionals.length === 0) {
        throw new Error("plot-success requires at least one bundle directory");
      }
      const bundles = positionals.map(loadBundle);
      const result = plotSuccess(bundles, out, {
        goalSet: flags.get("goal-set") ?? "gid",
        roundsScale: flags.has("rounds-scale") ? Number(flags.get("rounds-scale")) : 1,
      });
      console.log(`wrote ${result.svgPath} and ${result.sidecarPath}`);
      return 0;
    }
    if (command === "plot-goals") {
      const { flags, positionals } = parseArgs(rest);
      const out = flags.get("out");
      if (!out) throw new Error("plot-goals requires --out <svg path>");
      if (positionals.length !== 1) {
        throw new Error("plot-goals takes exactly one snapshot CSV");
      }
      const result = plotGoalScatter(positionals[0], out);
      console.log(
        `wrote ${result.svgPath} (${result.pointCount} goals, rounds ` +
          `${result.colorbarDomain[0]}..${result.colorbarDomain[1]})`,
      );
      return 0;
    }
    console.error("usage: plotviz <plot-success|plot-goals> ...");
    return 2;
  } catch (e) {
    if (e instanceof SchemaError || e instanceof Error) {
      console.error(`error: ${e.message}`);
      return 1;
    }
    throw e;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
