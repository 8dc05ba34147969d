/**
 * Minimal deterministic SVG scene builder: fixed canvas, linear or log
 * scales, tick generation, polylines and markers.  Output depends only on
 * the input data, so identical inputs produce identical bytes.
 */

export const WIDTH = 800;
export const HEIGHT = 600;
export const MARGIN = { left: 72, right: 24, top: 36, bottom: 56 };

export function fmt(x: number): string {
  if (!Number.isFinite(x)) return "0";
  const s = x.toPrecision(8);
  return String(Number(s)); // canonical shortest form, deterministic
}

export interface Scale {
  (value: number): number;
  ticks: number[];
  log: boolean;
  domain: [number, number];
}

function niceLinearTicks(lo: number, hi: number, n = 6): number[] {
  if (!(hi > lo)) return [lo];
  const span = hi - lo;
  const step0 = span / n;
  const mag = Math.pow(10, Math.floor(Math.log10(step0)));
  const candidates = [1, 2, 2.5, 5, 10].map((m) => m * mag);
  const step = candidates.find((c) => span / c <= n) ?? candidates[candidates.length - 1];
  const first = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = first; v <= hi + 1e-12 * span; v += step) ticks.push(Number(v.toPrecision(12)));
  return ticks;
}

function logTicks(lo: number, hi: number): number[] {
  const ticks: number[] = [];
  const eLo = Math.floor(Math.log10(lo));
  const eHi = Math.ceil(Math.log10(hi));
  for (let e = eLo; e <= eHi; e++) {
    const v = Math.pow(10, e);
    if (v >= lo * 0.999 && v <= hi * 1.001) ticks.push(v);
  }
  return ticks.length >= 2 ? ticks : [lo, hi];
}

export function makeScale(
  values: number[],
  pixelRange: [number, number],
  log: boolean,
): Scale {
  const finite = values.filter((v) => Number.isFinite(v) && (!log || v > 0));
  let lo = Math.min(...finite);
  let hi = Math.max(...finite);
  if (!(hi > lo)) {
    hi = lo === 0 ? 1 : lo * 1.5;
    lo = lo === 0 ? -1 : lo * 0.5;
  }
  if (!log) {
    const pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  const [p0, p1] = pixelRange;
  const t = (v: number) => (log ? Math.log10(v) : v);
  const scale = ((value: number) =>
    p0 + ((t(value) - t(lo)) / (t(hi) - t(lo))) * (p1 - p0)) as Scale;
  scale.ticks = log ? logTicks(lo, hi) : niceLinearTicks(lo, hi);
  scale.log = log;
  scale.domain = [lo, hi];
  return scale;
}

export class Svg {
  private parts: string[] = [];

  constructor(title: string) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="Helvetica, Arial, sans-serif">`,
      `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
      `<text x="${WIDTH / 2}" y="22" text-anchor="middle" font-size="16">${escapeXml(title)}</text>`,
    );
  }

  axes(xScale: Scale, yScale: Scale, xLabel: string, yLabel: string): void {
    const x0 = MARGIN.left;
    const x1 = WIDTH - MARGIN.right;
    const y0 = HEIGHT - MARGIN.bottom;
    const y1 = MARGIN.top;
    this.parts.push(
      `<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="black"/>`,
      `<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="black"/>`,
    );
    for (const tick of xScale.ticks) {
      const px = fmt(xScale(tick));
      this.parts.push(
        `<line x1="${px}" y1="${y0}" x2="${px}" y2="${y0 + 5}" stroke="black"/>`,
        `<text x="${px}" y="${y0 + 20}" text-anchor="middle" font-size="11">${tickLabel(tick, xScale.log)}</text>`,
      );
    }
    for (const tick of yScale.ticks) {
      const py = fmt(yScale(tick));
      this.parts.push(
        `<line x1="${x0 - 5}" y1="${py}" x2="${x0}" y2="${py}" stroke="black"/>`,
        `<text x="${x0 - 8}" y="${py}" text-anchor="end" dominant-baseline="middle" font-size="11">${tickLabel(tick, yScale.log)}</text>`,
      );
    }
    this.parts.push(
      `<text x="${(x0 + x1) / 2}" y="${HEIGHT - 12}" text-anchor="middle" font-size="13">${escapeXml(xLabel)}</text>`,
      `<text x="18" y="${(y0 + y1) / 2}" text-anchor="middle" font-size="13" transform="rotate(-90 18 ${(y0 + y1) / 2})">${escapeXml(yLabel)}</text>`,
    );
  }

  polyline(
    xs: number[],
    ys: number[],
    xScale: Scale,
    yScale: Scale,
    opts: { color: string; opacity?: number; dash?: boolean; width?: number },
  ): void {
    const pts: string[] = [];
    for (let i = 0; i < xs.length; i++) {
      if (!Number.isFinite(xs[i]) || !Number.isFinite(ys[i])) continue;
      if (xScale.log && xs[i] <= 0) continue;
      if (yScale.log && ys[i] <= 0) continue;
      pts.push(`${fmt(xScale(xs[i]))},${fmt(yScale(ys[i]))}`);
    }
    if (pts.length === 0) return;
    const dash = opts.dash ? ' stroke-dasharray="6,4"' : "";
    const opacity = opts.opacity === undefined ? 1 : opts.opacity;
    this.parts.push(
      `<polyline points="${pts.join(" ")}" fill="none" stroke="${opts.color}" stroke-width="${opts.width ?? 1.5}" stroke-opacity="${fmt(opacity)}"${dash}/>`,
    );
  }

  region(xs: number[], yLow: number[], yHigh: number[], xScale: Scale, yScale: Scale, color: string, opacity: number): void {
    const fwd: string[] = [];
    const back: string[] = [];
    for (let i = 0; i < xs.length; i++) {
      fwd.push(`${fmt(xScale(xs[i]))},${fmt(yScale(yLow[i]))}`);
      back.push(`${fmt(xScale(xs[xs.length - 1 - i]))},${fmt(yScale(yHigh[xs.length - 1 - i]))}`);
    }
    this.parts.push(
      `<polygon points="${fwd.concat(back).join(" ")}" fill="${color}" fill-opacity="${fmt(opacity)}" stroke="none"/>`,
    );
  }

  marker(x: number, y: number, xScale: Scale, yScale: Scale, color: string, opacity = 1): void {
    if (xScale.log && x <= 0) return;
    if (yScale.log && y <= 0) return;
    this.parts.push(
      `<circle cx="${fmt(xScale(x))}" cy="${fmt(yScale(y))}" r="3" fill="${color}" fill-opacity="${fmt(opacity)}"/>`,
    );
  }

  legend(entries: { label: string; color: string; dash?: boolean; opacity?: number }[]): void {
    let y = MARGIN.top + 10;
    const x = WIDTH - MARGIN.right - 170;
    for (const e of entries) {
      const dash = e.dash ? ' stroke-dasharray="6,4"' : "";
      this.parts.push(
        `<line x1="${x}" y1="${y}" x2="${x + 28}" y2="${y}" stroke="${e.color}" stroke-width="2" stroke-opacity="${fmt(e.opacity ?? 1)}"${dash}/>`,
        `<text x="${x + 34}" y="${y + 4}" font-size="11">${escapeXml(e.label)}</text>`,
      );
      y += 16;
    }
  }

  render(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

function tickLabel(v: number, log: boolean): string {
  if (log) {
    const e = Math.round(Math.log10(v));
    if (Math.abs(v - Math.pow(10, e)) < 1e-9 * v) return `1e${e}`;
  }
  if (Math.abs(v) >= 1e4 || (v !== 0 && Math.abs(v) < 1e-3)) return v.toExponential(1);
  return String(Number(v.toPrecision(6)));
}

function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function plotArea(): { x: [number, number]; y: [number, number] } {
  return {
    x: [MARGIN.left, WIDTH - MARGIN.right],
    y: [HEIGHT - MARGIN.bottom, MARGIN.top],
  };
}
