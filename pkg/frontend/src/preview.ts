/** Debounced live-preview scheduler.
 *
 * Guarantees at most one in-flight sliders request; edits arriving while a
 * request is pending are coalesced and the latest values are sent once the
 * response lands (latest wins). A response is applied only if it answers the
 * newest payload, so the preview never shows a stale render after quiescence.
 */

import { KnotOverride, SliderValues } from "./types.js";

export interface PreviewRequest {
  sliders: SliderValues;
  knots: KnotOverride[];
}

export interface PreviewUpdaterOptions {
  debounceMs?: number;
  onPreview: (blob: Blob, request: PreviewRequest) => void;
  onError: (error: unknown, request: PreviewRequest) => void;
}

export class PreviewUpdater {
  private latest: PreviewRequest | null = null;
  private generation = 0;
  private inFlight = false;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private readonly debounceMs: number;
  requestCount = 0;

  constructor(
    private readonly send: (request: PreviewRequest) => Promise<Blob>,
    private readonly options: PreviewUpdaterOptions,
  ) {
    this.debounceMs = options.debounceMs ?? 150;
  }

  /** Record a new desired state and (re)start the debounce window. */
  schedule(sliders: SliderValues, knots: KnotOverride[] = []): void {
    this.latest = { sliders: { ...sliders }, knots: [...knots] };
    this.generation += 1;
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.flush();
    }, this.debounceMs);
  }

  get busy(): boolean {
    return this.inFlight || this.timer !== null;
  }

  private async flush(): Promise<void> {
    if (this.inFlight || this.latest === null) return;
    const request = this.latest;
    const generation = this.generation;
    this.inFlight = true;
    this.requestCount += 1;
    try {
      const blob = await this.send(request);
      if (generation === this.generation) {
        this.options.onPreview(blob, request);
      }
    } catch (error) {
      if (generation === this.generation) {
        this.options.onError(error, request);
        this.latest = null;
      }
    } finally {
      this.inFlight = false;
      if (this.generation !== generation && this.timer === null) {
        void this.flush();
      }
    }
  }
}
