/**
 * Minimal SVG scene builder: scales, axes, polylines, bands and cells.
 * No DOM, no dependencies; figures are plain XML strings.
 */

export interface Scale {
  (value: number): number;
  ticks(): number[];
}

function niceLinearTicks(lo: number, hi: number, count = 6): number[] {
  const span = hi - lo;
  if (span <= 0) return [lo];
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const err = (count * step) / span;
  const mult = err <= 0.15 ? 10 : err <= 0.35 ? 5 : err <= 0.75 ? 2 : 1;
  const s = step * mult;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / s) * s; v <= hi + 1e-12 * s; v += s) ticks.push(v);
  return ticks;
}

export function linearScale(lo: number, hi: number, a: number, b: number): Scale {
  const f = ((value: number) => a + ((value - lo) / (hi - lo)) * (b - a)) as Scale;
  f.ticks = () => niceLinearTicks(lo, hi);
  return f;
}

export function logScale(lo: number, hi: number, a: number, b: number): Scale {
  const llo = Math.log10(lo);
  const lhi = Math.log10(hi);
  const f = ((value: number) =>
    a + ((Math.log10(value) - llo) / (lhi - llo)) * (b - a)) as Scale;
  f.ticks = () => {
    const ticks: number[] = [];
    for (let e = Math.ceil(llo); e <= Math.floor(lhi); e++) ticks.push(Math.pow(10, e));
    if (ticks.length === 0) ticks.push(lo, hi);
    return ticks;
  };
  return f;
}

export function formatTick(v: number): string {
  if (v === 0) return "0";
  const abs = Math.abs(v);
  if (abs >= 1e4 || abs < 1e-3) return v.toExponential(0).replace("+", "");
  return `${parseFloat(v.toPrecision(4))}`;
}

const esc = (s: string) => s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");

export class Svg {
  private parts: string[] = [];

  constructor(readonly width: number, readonly height: number) {}

  raw(element: string): void {
    this.parts.push(element);
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, width = 1): void {
    this.raw(
      `<line x1="${x1.toFixed(2)}" y1="${y1.toFixed(2)}" x2="${x2.toFixed(2)}" ` +
        `y2="${y2.toFixed(2)}" stroke="${stroke}" stroke-width="${width}"/>`
    );
  }

  polyline(points: Array<[number, number]>, stroke: string, width = 1.5): void {
    const attr = points.map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`).join(" ");
    this.raw(`<polyline points="${attr}" fill="none" stroke="${stroke}" stroke-width="${width}"/>`);
  }

  polygon(points: Array<[number, number]>, fill: string, opacity = 0.2): void {
    const attr = points.map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`).join(" ");
    this.raw(`<polygon points="${attr}" fill="${fill}" fill-opacity="${opacity}" stroke="none"/>`);
  }

  rect(x: number, y: number, w: number, h: number, fill: string, title?: string): void {
    const tip = title ? `<title>${esc(title)}</title>` : "";
    this.raw(
      `<rect x="${x.toFixed(2)}" y="${y.toFixed(2)}" width="${w.toFixed(2)}" ` +
        `height="${h.toFixed(2)}" fill="${fill}">${tip}</rect>`
    );
  }

  text(x: number, y: number, content: string, opts: { size?: number; anchor?: string; rotate?: number } = {}): void {
    const size = opts.size ?? 11;
    const anchor = opts.anchor ?? "start";
    const rotate = opts.rotate ? ` transform="rotate(${opts.rotate} ${x} ${y})"` : "";
    this.raw(
      `<text x="${x.toFixed(2)}" y="${y.toFixed(2)}" font-size="${size}" ` +
        `font-family="sans-serif" text-anchor="${anchor}"${rotate}>${esc(content)}</text>`
    );
  }

  render(): string {
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" ` +
      `height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">\n` +
      `<rect width="${this.width}" height="${this.height}" fill="white"/>\n` +
      this.parts.join("\n") +
      "\n</svg>\n"
    );
  }
}

export interface Frame {
  x: Scale;
  y: Scale;
  left: number;
  right: number;
  top: number;
  bottom: number;
}

/** Draw axes with ticks and labels; returns nothing, mutates the scene. */
export function drawAxes(
  svg: Svg,
  frame: Frame,
  xLabel: string,
  yLabel: string
): void {
  const { x, y, left, right, top, bottom } = frame;
  svg.line(left, bottom, right, bottom, "#222");
  svg.line(left, top, left, bottom, "#222");
  for (const v of x.ticks()) {
    const px = x(v);
    if (px < left - 0.5 || px > right + 0.5) continue;
    svg.line(px, bottom, px, bottom + 4, "#222");
    svg.text(px, bottom + 16, formatTick(v), { anchor: "middle", size: 10 });
  }
  for (const v of y.ticks()) {
    const py = y(v);
    if (py < top - 0.5 || py > bottom + 0.5) continue;
    svg.line(left - 4, py, left, py, "#222");
    svg.text(left - 7, py + 3, formatTick(v), { anchor: "end", size: 10 });
    svg.line(left, py, right, py, "#eee");
  }
  svg.text((left + right) / 2, bottom + 32, xLabel, { anchor: "middle" });
  svg.text(14, (top + bottom) / 2, yLabel, { anchor: "middle", rotate: -90 });
}

export const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/** Blue-white-red diverging color for values in [-1, 1]. */
export function divergingColor(v: number): string {
  const t = Math.max(-1, Math.min(1, v));
  const mix = (a: number, b: number, w: number) => Math.round(a + (b - a) * w);
  if (t < 0) {
    const w = 1 + t;
    return `rgb(${mix(33, 255, w)},${mix(102, 255, w)},${mix(172, 255, w)})`;
  }
  const w = 1 - t;
  return `rgb(${mix(178, 255, w)},${mix(24, 255, w)},${mix(43, 255, w)})`;
}

/** White-to-dark sequential color for values in [0, 1]. */
export function sequentialColor(v: number): string {
  const t = Math.max(0, Math.min(1, v));
  const mix = (a: number, b: number) => Math.round(a + (b - a) * t);
  return `rgb(${mix(247, 8)},${mix(251, 48)},${mix(255, 107)})`;
}
