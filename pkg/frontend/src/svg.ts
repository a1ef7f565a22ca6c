/** Minimal deterministic SVG chart primitives (no DOM, pure strings). */

export interface Frame {
  width: number;
  height: number;
  left: number;
  right: number;
  top: number;
  bottom: number;
}

export const FRAME: Frame = {
  width: 640,
  height: 420,
  left: 70,
  right: 20,
  top: 36,
  bottom: 52,
};

export interface Scale {
  toPx: (v: number) => number;
  ticks: number[];
  log: boolean;
}

function niceTicksLinear(lo: number, hi: number, n = 5): number[] {
  if (hi <= lo) {
    return [lo];
  }
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / n)));
  const err = span / (n * step);
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = mult * step;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / s) * s; v <= hi + 1e-12 * span; v += s) {
    ticks.push(v);
  }
  return ticks;
}

function decadeTicks(lo: number, hi: number): number[] {
  const ticks: number[] = [];
  for (let e = Math.ceil(Math.log10(lo) - 1e-12); Math.pow(10, e) <= hi * (1 + 1e-12); e++) {
    ticks.push(Math.pow(10, e));
  }
  if (ticks.length === 0) {
    ticks.push(lo, hi);
  }
  return ticks;
}

export function makeScale(
  lo: number,
  hi: number,
  pxLo: number,
  pxHi: number,
  log: boolean,
): Scale {
  if (log) {
    const llo = Math.log10(lo);
    const lhi = Math.log10(hi);
    const span = lhi - llo || 1;
    return {
      toPx: (v) => pxLo + ((Math.log10(v) - llo) / span) * (pxHi - pxLo),
      ticks: decadeTicks(lo, hi),
      log: true,
    };
  }
  const span = hi - lo || 1;
  return {
    toPx: (v) => pxLo + ((v - lo) / span) * (pxHi - pxLo),
    ticks: niceTicksLinear(lo, hi),
    log: false,
  };
}

export function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 0.01 && a < 10000) {
    return String(Number(v.toPrecision(6)));
  }
  return v.toExponential(2);
}

export class SvgChart {
  private parts: string[] = [];
  readonly frame: Frame;
  readonly x: Scale;
  readonly y: Scale;

  constructor(
    title: string,
    xLabel: string,
    yLabel: string,
    xRange: [number, number],
    yRange: [number, number],
    opts: { logX?: boolean; logY?: boolean } = {},
    frame: Frame = FRAME,
  ) {
    this.frame = frame;
    this.x = makeScale(xRange[0], xRange[1], frame.left, frame.width - frame.right, !!opts.logX);
    this.y = makeScale(yRange[0], yRange[1], frame.height - frame.bottom, frame.top, !!opts.logY);
    const f = frame;
    this.parts.push(
      `<rect x="0" y="0" width="${f.width}" height="${f.height}" fill="white"/>`,
      `<text x="${f.width / 2}" y="20" text-anchor="middle" font-size="15" font-family="sans-serif">${title}</text>`,
      `<text x="${(f.left + f.width - f.right) / 2}" y="${f.height - 12}" text-anchor="middle" font-size="12" font-family="sans-serif">${xLabel}</text>`,
      `<text x="16" y="${(f.top + f.height - f.bottom) / 2}" text-anchor="middle" font-size="12" font-family="sans-serif" transform="rotate(-90 16 ${(f.top + f.height - f.bottom) / 2})">${yLabel}</text>`,
    );
    this.axes();
  }

  private axes(): void {
    const f = this.frame;
    const y0 = f.height - f.bottom;
    this.parts.push(
      `<line x1="${f.left}" y1="${y0}" x2="${f.width - f.right}" y2="${y0}" stroke="black"/>`,
      `<line x1="${f.left}" y1="${f.top}" x2="${f.left}" y2="${y0}" stroke="black"/>`,
    );
    for (const t of this.x.ticks) {
      const px = this.x.toPx(t);
      this.parts.push(
        `<line x1="${fmt(px)}" y1="${y0}" x2="${fmt(px)}" y2="${y0 + 5}" stroke="black"/>`,
        `<text x="${fmt(px)}" y="${y0 + 18}" text-anchor="middle" font-size="10" font-family="sans-serif">${fmt(t)}</text>`,
      );
    }
    for (const t of this.y.ticks) {
      const py = this.y.toPx(t);
      this.parts.push(
        `<line x1="${f.left - 5}" y1="${fmt(py)}" x2="${f.left}" y2="${fmt(py)}" stroke="black"/>`,
        `<text x="${f.left - 8}" y="${fmt(py + 3)}" text-anchor="end" font-size="10" font-family="sans-serif">${fmt(t)}</text>`,
      );
    }
  }

  polyline(xs: number[], ys: number[], color: string, width = 1.5, dash?: string): void {
    const pts = xs
      .map((x, i) => `${fmt(this.x.toPx(x))},${fmt(this.y.toPx(ys[i]))}`)
      .join(" ");
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<polyline points="${pts}" fill="none" stroke="${color}" stroke-width="${width}"${d}/>`,
    );
  }

  scatter(xs: number[], ys: number[], color: string, r = 3.5): void {
    for (let i = 0; i < xs.length; i++) {
      this.parts.push(
        `<circle cx="${fmt(this.x.toPx(xs[i]))}" cy="${fmt(this.y.toPx(ys[i]))}" r="${r}" fill="${color}"/>`,
      );
    }
  }

  bar(x0: number, x1: number, y: number, yBase: number, color: string): void {
    const px0 = this.x.toPx(x0);
    const px1 = this.x.toPx(x1);
    const py = this.y.toPx(y);
    const pb = this.y.toPx(yBase);
    const top = Math.min(py, pb);
    const h = Math.abs(pb - py);
    this.parts.push(
      `<rect x="${fmt(px0)}" y="${fmt(top)}" width="${fmt(px1 - px0)}" height="${fmt(h)}" fill="${color}"/>`,
    );
  }

  band(xs: number[], lo: number[], hi: number[], color: string): void {
    const fwd = xs.map((x, i) => `${fmt(this.x.toPx(x))},${fmt(this.y.toPx(hi[i]))}`);
    const bwd = xs
      .slice()
      .reverse()
      .map((x, i) => `${fmt(this.x.toPx(x))},${fmt(this.y.toPx(lo[xs.length - 1 - i]))}`);
    this.parts.push(
      `<polygon points="${[...fwd, ...bwd].join(" ")}" fill="${color}" fill-opacity="0.18" stroke="none"/>`,
    );
  }

  label(text: string, x: number, y: number, color = "black"): void {
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" font-size="11" font-family="sans-serif" fill="${color}">${text}</text>`,
    );
  }

  toString(): string {
    const f = this.frame;
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${f.width}" height="${f.height}" viewBox="0 0 ${f.width} ${f.height}">\n` +
      this.parts.join("\n") +
      "\n</svg>\n"
    );
  }
}
