/** Shared types mirroring the enhancement service's JSON contracts. */

export const IN_CHANNELS = ["r", "g", "b", "x", "y"] as const;
export const OUT_CHANNELS = ["r", "g", "b"] as const;

export type InChannel = (typeof IN_CHANNELS)[number];
export type OutChannel = (typeof OUT_CHANNELS)[number];

/** "r_to_g" style key for one of the 15 curves. */
export type CurveKey = `${InChannel}_to_${OutChannel}`;

export const CURVE_KEYS: CurveKey[] = IN_CHANNELS.flatMap((i) =>
  OUT_CHANNELS.map((j) => `${i}_to_${j}` as CurveKey),
);

export interface CurveSetDoc {
  version: number;
  curves: Record<CurveKey, number[]>;
  sliders?: Record<CurveKey, number>;
}

export interface StyleInfo {
  id: string;
  provenance: string;
  dim: number;
}

export interface EnhanceResponse {
  session_id: string;
  preview_png: string; // base64
  curves: { json: string };
}

export interface KnotOverride {
  input: InChannel;
  output: OutChannel;
  index: number;
  value: number;
}

export type SliderValues = Record<CurveKey, number>;

export function defaultSliders(): SliderValues {
  const out = {} as SliderValues;
  for (const key of CURVE_KEYS) out[key] = 1.0;
  return out;
}
