/**
 * Goal scatter from a generator-buffer snapshot CSV: markers colored by the
 * round each goal was proposed (blue oldest, red most recent), the goal box
 * drawn for reference, plus a colorbar.
 */

import * as fs from "node:fs";

import { GoalSnapshot, SchemaError, parseGoalSnapshot } from "./schema.js";
import { SvgDoc, colorbar, linearScale, recencyColor } from "./svg.js";

export interface GoalPlotOptions {
  box?: { low: number[]; high: number[] }; // goal-space box to draw
  width?: number;
  height?: number;
  warn?: (msg: string) => void;
}

export interface GoalPlotResult {
  svgPath: string;
  pointCount: number;
  colorbarDomain: [number, number];
}

export function plotGoalScatter(
  snapshotPath: string,
  outPath: string,
  opts: GoalPlotOptions = {},
): GoalPlotResult {
  const snapshot: GoalSnapshot = parseGoalSnapshot(
    fs.readFileSync(snapshotPath, "utf8"),
    snapshotPath,
  );
  if (snapshot.rows.length === 0) {
    throw new SchemaError(`${snapshotPath}: snapshot holds no goals`);
  }
  if (snapshot.goalDim !== 2) {
    (opts.warn ?? console.warn)(
      `${snapshotPath}: goals have ${snapshot.goalDim} dimensions; plotting the first two`,
    );
  }

  const box = opts.box ?? { low: [-0.25, -0.25], high: [0.25, 0.25] };
  const xs = snapshot.rows.map((r) => r.goal[0]);
  const ys = snapshot.rows.map((r) => r.goal[1]);
  const xLo = Math.min(box.low[0], ...xs);
  const xHi = Math.max(box.high[0], ...xs);
  const yLo = Math.min(box.low[1], ...ys);
  const yHi = Math.max(box.high[1], ...ys);
  const padX = 0.06 * (xHi - xLo || 1);
  const padY = 0.06 * (yHi - yLo || 1);

  const width = opts.width ?? 520;
  const height = opts.height ?? 460;
  const margin = { left: 64, right: 72, top: 32, bottom: 48 };
  const x = linearScale([xLo - padX, xHi + padX], [margin.left, width - margin.right]);
  const y = linearScale([yLo - padY, yHi + padY], [height - margin.bottom, margin.top]);

  const rounds = snapshot.rows.map((r) => r.roundProposed);
  const rLo = Math.min(...rounds);
  const rHi = Math.max(...rounds);
  const span = rHi - rLo || 1;

  const doc = new SvgDoc(width, height);
  doc.xAxis(x, height - margin.bottom, "goal x");
  doc.yAxis(y, margin.left, "goal y");
  doc.rect(
    x(box.low[0]),
    y(box.high[1]),
    x(box.high[0]) - x(box.low[0]),
    y(box.low[1]) - y(box.high[1]),
    "#666",
  );
  for (const row of snapshot.rows) {
    const t = (row.roundProposed - rLo) / span;
    doc.circle(x(row.goal[0]), y(row.goal[1]), 2.5, recencyColor(t));
  }
  colorbar(doc, width - margin.right + 16, margin.top, height - margin.top - margin.bottom,
           [rLo, rHi], "round");
  doc.text(width / 2, margin.top - 12, "proposed goals (red = recent)", {
    anchor: "middle",
    size: 13,
  });

  fs.writeFileSync(outPath, doc.toString());
  return { svgPath: outPath, pointCount: snapshot.rows.length, colorbarDomain: [rLo, rHi] };
}
