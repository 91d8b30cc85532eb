/**
 * Success-rate curves: one line per bundle (method), mean across seeds with
 * a +-1 population-std band. Every plotted number is also written to a
 * sidecar CSV next to the image for audit.
 */

import * as fs from "node:fs";

import { RunBundle } from "./bundle.js";
import { CurvePoint, successCurve } from "./stats.js";
import { METHOD_PALETTE, SvgDoc, linearScale } from "./svg.js";

export interface SuccessPlotOptions {
  goalSet: string;
  roundsScale?: number; // e.g. 100 renders the x axis in hundreds of rounds
  width?: number;
  height?: number;
}

export interface SuccessPlotResult {
  svgPath: string;
  sidecarPath: string;
  curves: Map<string, CurvePoint[]>;
}

export function sidecarCsv(curves: Map<string, CurvePoint[]>): string {
  const lines = ["method,round,mean,std,n"];
  for (const [method, points] of curves) {
    for (const p of points) {
      lines.push(`${method},${p.round},${p.mean},${p.std},${p.n}`);
    }
  }
  return lines.join("\n") + "\n";
}

export function plotSuccess(
  bundles: RunBundle[],
  outPath: string,
  opts: SuccessPlotOptions,
): SuccessPlotResult {
  if (bundles.length === 0) {
    throw new Error("plotSuccess needs at least one bundle");
  }
  const curves = new Map<string, CurvePoint[]>();
  for (const bundle of bundles) {
    const key = curves.has(bundle.method) ? `${bundle.method} (${bundle.dir})` : bundle.method;
    curves.set(key, successCurve(bundle, opts.goalSet));
  }

  const width = opts.width ?? 640;
  const height = opts.height ?? 420;
  const margin = { left: 64, right: 20, top: 32, bottom: 48 };
  const maxRound = Math.max(...[...curves.values()].flat().map((p) => p.round));
  const x = linearScale([0, maxRound || 1], [margin.left, width - margin.right]);
  const y = linearScale([0, 1], [height - margin.bottom, margin.top]);

  const doc = new SvgDoc(width, height);
  const scale = opts.roundsScale ?? 1;
  const xLabel = scale === 1 ? "rounds" : `rounds (x${scale})`;
  doc.xAxis(x, height - margin.bottom, xLabel, (v) => String(Math.round((v / scale) * 100) / 100));
  doc.yAxis(y, margin.left, "success rate");
  doc.text(width / 2, margin.top - 12, `goal set: ${opts.goalSet}`, { anchor: "middle", size: 13 });

  let colorIndex = 0;
  let legendY = margin.top + 4;
  for (const [method, points] of curves) {
    const color = METHOD_PALETTE[colorIndex % METHOD_PALETTE.length];
    colorIndex += 1;
    const upper = points.map((p) => [x(p.round), y(Math.min(1, p.mean + p.std))] as [number, number]);
    const lower = points.map((p) => [x(p.round), y(Math.max(0, p.mean - p.std))] as [number, number]);
    doc.band(upper, lower, color + "33");
    doc.polyline(points.map((p) => [x(p.round), y(p.mean)]), color);
    doc.line(margin.left + 8, legendY, margin.left + 28, legendY, color, 3);
    doc.text(margin.left + 34, legendY + 4, method, { size: 11 });
    legendY += 16;
  }

  fs.writeFileSync(outPath, doc.toString());
  const sidecarPath = outPath.replace(/\.svg$/, "") + ".csv";
  fs.writeFileSync(sidecarPath, sidecarCsv(curves));
  return { svgPath: outPath, sidecarPath, curves };
}
