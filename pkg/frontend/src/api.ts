/** Thin typed client for the enhancement service HTTP API. */

import { EnhanceResponse, KnotOverride, SliderValues, StyleInfo } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

async function raiseForStatus(resp: Response): Promise<Response> {
  if (resp.ok) return resp;
  let message = resp.statusText;
  try {
    const doc = (await resp.json()) as { message?: string };
    if (doc.message) message = doc.message;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(resp.status, message);
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async listStyles(): Promise<StyleInfo[]> {
    const resp = await raiseForStatus(await this.fetchImpl(`${this.baseUrl}/styles`));
    return (await resp.json()) as StyleInfo[];
  }

  async createStyle(images: Blob[], name?: string): Promise<{ id: string }> {
    const form = new FormData();
    for (const image of images) form.append("images", image);
    if (name !== undefined) form.append("name", name);
    const resp = await raiseForStatus(
      await this.fetchImpl(`${this.baseUrl}/styles`, { method: "POST", body: form }),
    );
    return (await resp.json()) as { id: string };
  }

  async enhance(image: Blob, source: string, target: string): Promise<EnhanceResponse> {
    const form = new FormData();
    form.append("image", image);
    form.append("source", source);
    form.append("target", target);
    const resp = await raiseForStatus(
      await this.fetchImpl(`${this.baseUrl}/enhance`, { method: "POST", body: form }),
    );
    return (await resp.json()) as EnhanceResponse;
  }

  /** Re-render the preview from cached curves; never triggers CNN inference. */
  async updateSliders(
    sessionId: string,
    sliders: SliderValues,
    knots: KnotOverride[] = [],
  ): Promise<Blob> {
    const resp = await raiseForStatus(
      await this.fetchImpl(`${this.baseUrl}/sessions/${sessionId}/sliders`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ sliders, knots }),
      }),
    );
    return await resp.blob();
  }

  async exportImage(sessionId: string, applySliders = true): Promise<Blob> {
    const resp = await raiseForStatus(
      await this.fetchImpl(`${this.baseUrl}/sessions/${sessionId}/export`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ apply_sliders: applySliders }),
      }),
    );
    return await resp.blob();
  }
}
