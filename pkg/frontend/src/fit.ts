/** Least-squares log-log fit, formula-identical to the CLI's sidecars. */

export interface FitResult {
  slope: number;
  intercept: number;
  stderr: number;
  band95: number;
  points: number;
}

export function loglogFit(xs: number[], ys: number[]): FitResult {
  if (xs.length !== ys.length || xs.length < 2) {
    throw new Error("log-log fit needs two equal-length arrays of >= 2 points");
  }
  const lx = xs.map(Math.log);
  const ly = ys.map(Math.log);
  const k = lx.length;
  const mx = lx.reduce((a, b) => a + b, 0) / k;
  const my = ly.reduce((a, b) => a + b, 0) / k;
  let sxx = 0;
  let sxy = 0;
  for (let i = 0; i < k; i++) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  const slope = sxy / sxx;
  const intercept = my - slope * mx;
  let ss = 0;
  for (let i = 0; i < k; i++) {
    const r = ly[i] - (intercept + slope * lx[i]);
    ss += r * r;
  }
  const stderr = k > 2 ? Math.sqrt(ss / (k - 2) / sxx) : 0;
  return {
    slope,
    intercept,
    stderr,
    band95: 1.96 * stderr,
    points: k,
  };
}

/** Fixed-key-order JSON with a trailing newline; byte-deterministic. */
export function fitToJson(fit: FitResult): string {
  const obj = {
    band95: fit.band95,
    intercept: fit.intercept,
    points: fit.points,
    slope: fit.slope,
    stderr: fit.stderr,
  };
  return JSON.stringify(obj, null, 2) + "\n";
}
