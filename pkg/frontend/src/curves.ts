/** CurveSet parsing and plot-data generation for the curve panel. */

import { CURVE_KEYS, CurveKey, CurveSetDoc, OUT_CHANNELS, OutChannel } from "./types.js";

export const CURVESET_VERSION = 1;

/** Parse and validate a served CurveSet JSON string. */
export function parseCurveSet(text: string): CurveSetDoc {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch {
    throw new Error("curve data is not valid JSON");
  }
  const obj = doc as CurveSetDoc;
  if (obj.version !== CURVESET_VERSION) {
    throw new Error(`unsupported curve version ${String(obj.version)}`);
  }
  for (const key of CURVE_KEYS) {
    const knots = obj.curves?.[key];
    if (!Array.isArray(knots) || knots.length < 2 || knots.some((v) => !Number.isFinite(v))) {
      throw new Error(`curve ${key}: expected >= 2 finite knots`);
    }
  }
  return obj;
}

export interface CurvePlot {
  key: CurveKey;
  output: OutChannel;
  /** Dense polyline samples in [0,1]^2 plot space (y is the residual value). */
  points: { x: number; y: number }[];
  /** Knot handles at their abscissae, for the expert editing panel. */
  knots: { x: number; y: number; index: number }[];
}

/**
 * Piecewise-linear dense samples through the served knots. The server is the
 * source of truth for curve shape; the panel only connects its samples.
 */
export function samplePolyline(knots: number[], samples: number): number[] {
  if (knots.length < 2) throw new Error("need >= 2 knots");
  if (samples < 2) throw new Error("need >= 2 samples");
  const out = new Array<number>(samples);
  for (let k = 0; k < samples; k++) {
    const t = (k / (samples - 1)) * (knots.length - 1);
    const seg = Math.min(Math.floor(t), knots.length - 2);
    const s = t - seg;
    out[k] = knots[seg] * (1 - s) + knots[seg + 1] * s;
  }
  return out;
}

/**
 * Plot data for all 15 curves, grouped by output channel. The default of 65
 * samples is a multiple of every knot interval count in use, so the dense
 * polyline passes exactly through the served knot values.
 */
export function renderCurvePanel(doc: CurveSetDoc, samples = 65): Map<OutChannel, CurvePlot[]> {
  if (samples < 64) throw new Error("curve panel needs >= 64 samples");
  const groups = new Map<OutChannel, CurvePlot[]>();
  for (const j of OUT_CHANNELS) groups.set(j, []);
  for (const key of CURVE_KEYS) {
    const knots = doc.curves[key];
    const output = key.slice(-1) as OutChannel;
    const dense = samplePolyline(knots, samples);
    groups.get(output)!.push({
      key,
      output,
      points: dense.map((y, k) => ({ x: k / (samples - 1), y })),
      knots: knots.map((y, index) => ({ x: index / (knots.length - 1), y, index })),
    });
  }
  return groups;
}

/** SVG path string for one plotted curve (viewBox [0,1]x[0,1], y flipped). */
export function curvePath(plot: CurvePlot): string {
  return plot.points
    .map((p, k) => `${k === 0 ? "M" : "L"}${p.x.toFixed(4)},${(1 - p.y).toFixed(4)}`)
    .join("");
}
