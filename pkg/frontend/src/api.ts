/** Typed client for the five serving endpoints.
 *
 * At most one request is in flight per endpoint: issuing a new one aborts its
 * predecessor, so stale slider positions can never overwrite fresh results.
 */

import type {
  ApiErrorBody,
  ExplainResponse,
  FeatureValues,
  Manifest,
  PredictResponse,
  WhatIfResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: ApiErrorBody,
  ) {
    super(`${body.code}${body.field ? ` (${body.field})` : ""}`);
  }
}

/** Thrown locally when a newer request supersedes this one. */
export class Superseded extends Error {}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private flights = new Map<string, AbortController>();

  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(endpoint: string, init?: RequestInit): Promise<T> {
    this.flights.get(endpoint)?.abort();
    const controller = new AbortController();
    this.flights.set(endpoint, controller);
    let resp: Response;
    try {
      resp = await this.fetchFn(`${this.baseUrl}${endpoint}`, {
        ...init,
        signal: controller.signal,
      });
    } catch (err) {
      if ((err as Error).name === "AbortError") throw new Superseded();
      throw err;
    }
    const body = await resp.json();
    if (!resp.ok) throw new ApiError(resp.status, body as ApiErrorBody);
    return body as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("/health");
  }

  schema(): Promise<Manifest> {
    return this.request("/schema");
  }

  private post<T>(endpoint: string, payload: unknown): Promise<T> {
    return this.request<T>(endpoint, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  predict(features: FeatureValues, requestId?: string): Promise<PredictResponse> {
    return this.post("/predict", { features, request_id: requestId });
  }

  whatif(base: FeatureValues, overrides: FeatureValues): Promise<WhatIfResponse> {
    return this.post("/whatif", { base, overrides });
  }

  explain(features: FeatureValues, nSamples: number): Promise<ExplainResponse> {
    return this.post("/explain", { features, n_samples: nSamples });
  }
}
