/** Typed client for the session service's HTTP+JSON API. */

import type { RleTrimap } from "./rle.js";

export type ClassLetter = "F" | "B" | "U";

export interface ClickJson {
  x: number;
  y: number;
  label: ClassLetter;
  ordinal: number;
}

export interface Metrics {
  mse: number | null;
  sad: number | null;
  mad: number | null;
  pixel_err: number | null;
}

export interface SessionState {
  id: string;
  width: number;
  height: number;
  working_size: number;
  predictor: string;
  clicks: ClickJson[];
  trimap_png: string; // base64
  alpha_png: string; // base64
  trimap_rle?: RleTrimap;
  metrics: Metrics | null;
  has_gt: boolean;
}

export interface Suggestion {
  converged: boolean;
  click: ClickJson | null;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function parseState(response: Response): Promise<SessionState> {
  const body = await response.json();
  if (!response.ok) {
    throw new ApiError(response.status, body.code ?? "error", body.message ?? "request failed");
  }
  return body as SessionState;
}

export class SessionApi {
  constructor(readonly baseUrl: string = "") {}

  async createSession(image: Blob, gtAlpha?: Blob, gtTrimap?: Blob): Promise<SessionState> {
    const form = new FormData();
    form.append("image", image, "image.png");
    if (gtAlpha) form.append("gt_alpha", gtAlpha, "gt_alpha.png");
    if (gtTrimap) form.append("gt_trimap", gtTrimap, "gt_trimap.png");
    return parseState(await fetch(`${this.baseUrl}/sessions`, { method: "POST", body: form }));
  }

  async addClick(id: string, x: number, y: number, label: ClassLetter): Promise<SessionState> {
    return parseState(
      await fetch(`${this.baseUrl}/sessions/${id}/clicks`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ x, y, label }),
      }),
    );
  }

  async undo(id: string): Promise<SessionState> {
    return parseState(await fetch(`${this.baseUrl}/sessions/${id}/undo`, { method: "POST" }));
  }

  async reset(id: string): Promise<SessionState> {
    return parseState(await fetch(`${this.baseUrl}/sessions/${id}/reset`, { method: "POST" }));
  }

  async getState(id: string): Promise<SessionState> {
    return parseState(await fetch(`${this.baseUrl}/sessions/${id}?rle=true`));
  }

  async suggest(id: string): Promise<Suggestion> {
    const response = await fetch(`${this.baseUrl}/sessions/${id}/suggest`);
    const body = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, body.code ?? "error", body.message ?? "request failed");
    }
    return body as Suggestion;
  }
}
