/**
 * Minimal SVG assembly: linear scales, axes, lines, bands, scatter markers,
 * and a vertical colorbar. Pure string building, no DOM.
 */

export interface Scale {
  (x: number): number;
  domain: [number, number];
  range: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 === 0 ? 1 : d1 - d0;
  const f = ((x: number) => r0 + ((x - d0) / span) * (r1 - r0)) as Scale;
  f.domain = domain;
  f.range = range;
  return f;
}

export function ticks(domain: [number, number], count = 5): number[] {
  const [lo, hi] = domain;
  if (lo === hi) return [lo];
  const out: number[] = [];
  for (let i = 0; i <= count; i++) out.push(lo + ((hi - lo) * i) / count);
  return out;
}

const fmt = (x: number): string => {
  const r = Math.round(x * 1e6) / 1e6;
  return Object.is(r, -0) ? "0" : String(r);
};

export function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export class SvgDoc {
  private parts: string[] = [];
  constructor(
    readonly width: number,
    readonly height: number,
  ) {}

  add(fragment: string): void {
    this.parts.push(fragment);
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke = "#333", width = 1): void {
    this.add(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" ` +
        `stroke="${stroke}" stroke-width="${width}"/>`,
    );
  }

  polyline(points: Array<[number, number]>, stroke: string, width = 2): void {
    const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.add(`<polyline points="${pts}" fill="none" stroke="${stroke}" stroke-width="${width}"/>`);
  }

  band(upper: Array<[number, number]>, lower: Array<[number, number]>, fill: string): void {
    const fwd = upper.map(([x, y]) => `${fmt(x)},${fmt(y)}`);
    const back = [...lower].reverse().map(([x, y]) => `${fmt(x)},${fmt(y)}`);
    this.add(`<polygon points="${[...fwd, ...back].join(" ")}" fill="${fill}" stroke="none"/>`);
  }

  circle(x: number, y: number, r: number, fill: string, opacity = 0.85): void {
    this.add(
      `<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${fmt(r)}" fill="${fill}" fill-opacity="${opacity}"/>`,
    );
  }

  rect(x: number, y: number, w: number, h: number, stroke: string, fill = "none"): void {
    this.add(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" ` +
        `fill="${fill}" stroke="${stroke}"/>`,
    );
  }

  text(x: number, y: number, content: string, opts: { size?: number; anchor?: string; rotate?: number } = {}): void {
    const size = opts.size ?? 11;
    const anchor = opts.anchor ?? "start";
    const rotate = opts.rotate ? ` transform="rotate(${opts.rotate} ${fmt(x)} ${fmt(y)})"` : "";
    this.add(
      `<text x="${fmt(x)}" y="${fmt(y)}" font-size="${size}" font-family="sans-serif" ` +
        `text-anchor="${anchor}"${rotate}>${esc(content)}</text>`,
    );
  }

  xAxis(scale: Scale, y: number, label: string, tickFormat: (v: number) => string = fmt): void {
    const [r0, r1] = scale.range;
    this.line(r0, y, r1, y);
    for (const t of ticks(scale.domain)) {
      const x = scale(t);
      this.line(x, y, x, y + 4);
      this.text(x, y + 16, tickFormat(t), { anchor: "middle", size: 10 });
    }
    this.text((r0 + r1) / 2, y + 32, label, { anchor: "middle" });
  }

  yAxis(scale: Scale, x: number, label: string): void {
    const [r0, r1] = scale.range;
    this.line(x, r0, x, r1);
    for (const t of ticks(scale.domain)) {
      const y = scale(t);
      this.line(x - 4, y, x, y);
      this.text(x - 6, y + 3, fmt(t), { anchor: "end", size: 10 });
    }
    const ymid = (r0 + r1) / 2;
    this.text(x - 34, ymid, label, { anchor: "middle", rotate: -90 });
  }

  toString(): string {
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" ` +
      `viewBox="0 0 ${this.width} ${this.height}">\n` +
      `<rect x="0" y="0" width="${this.width}" height="${this.height}" fill="white"/>\n` +
      this.parts.join("\n") +
      "\n</svg>\n"
    );
  }
}

/** Blue (old) to red (recent) color ramp. */
export function recencyColor(t: number): string {
  const clamped = Math.max(0, Math.min(1, t));
  const r = Math.round(40 + 200 * clamped);
  const g = Math.round(60 + 40 * (1 - Math.abs(clamped - 0.5) * 2));
  const b = Math.round(240 - 200 * clamped);
  return `rgb(${r},${g},${b})`;
}

export const METHOD_PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
];

export function colorbar(
  doc: SvgDoc,
  x: number,
  y: number,
  height: number,
  domain: [number, number],
  label: string,
): void {
  const steps = 64;
  for (let i = 0; i < steps; i++) {
    const t = i / (steps - 1);
    const yy = y + height - ((i + 1) / steps) * height;
    doc.add(
      `<rect x="${x}" y="${yy.toFixed(3)}" width="12" height="${(height / steps + 0.5).toFixed(3)}" ` +
        `fill="${recencyColor(t)}" stroke="none"/>`,
    );
  }
  doc.rect(x, y, 12, height, "#333");
  doc.text(x + 16, y + 8, String(domain[1]), { size: 10 });
  doc.text(x + 16, y + height, String(domain[0]), { size: 10 });
  doc.text(x + 16, y + height / 2, label, { size: 10 });
}
