/** Studio state container: session, sliders, curves, preview, styles. */

import { CurveSetDoc, CurveKey, KnotOverride, SliderValues, StyleInfo, defaultSliders } from "./types.js";

export interface StudioState {
  sessionId: string | null;
  sliders: SliderValues;
  knotOverrides: KnotOverride[];
  curves: CurveSetDoc | null;
  previewUrl: string | null;
  styles: StyleInfo[];
  pending: boolean;
  error: string | null;
}

export type Listener = (state: StudioState) => void;

export function initialState(): StudioState {
  return {
    sessionId: null,
    sliders: defaultSliders(),
    knotOverrides: [],
    curves: null,
    previewUrl: null,
    styles: [],
    pending: false,
    error: null,
  };
}

export class Store {
  private state: StudioState = initialState();
  private listeners: Listener[] = [];

  get(): StudioState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  update(patch: Partial<StudioState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.state);
  }

  /** Set one slider, validating the [0,2] range. */
  setSlider(key: CurveKey, value: number): void {
    if (!Number.isFinite(value) || value < 0 || value > 2) {
      throw new Error(`slider ${key}: value ${value} outside [0,2]`);
    }
    this.update({ sliders: { ...this.state.sliders, [key]: value } });
  }

  /** Start a new session: curves become the authoritative server copy. */
  openSession(sessionId: string, curves: CurveSetDoc, previewUrl: string): void {
    this.update({
      sessionId,
      curves,
      previewUrl,
      sliders: defaultSliders(),
      knotOverrides: [],
      pending: false,
      error: null,
    });
  }
}
