// Thin typed client over the difficulty service. Every number displayed by
// the console comes through here untouched; the client never computes.

import type {
  AnalyticsPayload,
  CurvePayload,
  LevelDetail,
  LevelSummary,
  WhatIfResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
  ) {
    super(`HTTP ${status}: ${code}`);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      let code = "unknown_error";
      try {
        const body = (await response.json()) as { error?: string };
        if (body && typeof body.error === "string") code = body.error;
      } catch {
        // non-JSON error body; keep the fallback code
      }
      throw new ApiError(response.status, code);
    }
    return (await response.json()) as T;
  }

  listLevels(): Promise<LevelSummary[]> {
    return this.request<LevelSummary[]>("/levels");
  }

  levelDetail(levelId: string): Promise<LevelDetail> {
    return this.request<LevelDetail>(`/levels/${encodeURIComponent(levelId)}`);
  }

  curve(levelId: string, from: number, to: number): Promise<CurvePayload> {
    const id = encodeURIComponent(levelId);
    return this.request<CurvePayload>(`/levels/${id}/curve?from=${from}&to=${to}`);
  }

  whatIf(levelId: string, delta: number, applyCorrection = false): Promise<WhatIfResponse> {
    const id = encodeURIComponent(levelId);
    return this.request<WhatIfResponse>(`/levels/${id}/whatif`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ delta, apply_correction: applyCorrection }),
    });
  }

  analytics(): Promise<AnalyticsPayload> {
    return this.request<AnalyticsPayload>("/analytics");
  }
}
