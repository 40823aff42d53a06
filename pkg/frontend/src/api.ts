// HTTP client for the genuq service. All uncertainty math happens
// server-side; this client only moves JSON. The API key, when set, goes
// into the POST /v1/chat body and nowhere else: never into URLs, never
// into storage, never into other requests.

import type {
  ChatMessage,
  ChatParams,
  ChatRequest,
  ChatTurnResult,
  EstimatorInfo,
  HealthInfo,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export type FetchLike = (
  url: string,
  init?: RequestInit,
) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    } catch (err) {
      throw new ApiError(0, `service unreachable: ${String(err)}`);
    }
    const body = await response.json().catch(() => ({}));
    if (!response.ok) {
      const detail =
        typeof body?.detail === "string"
          ? body.detail
          : JSON.stringify(body?.detail ?? body);
      throw new ApiError(response.status, detail);
    }
    return body as T;
  }

  async health(): Promise<HealthInfo> {
    return this.request<HealthInfo>("/v1/health");
  }

  async estimators(): Promise<EstimatorInfo[]> {
    const body = await this.request<{ estimators: EstimatorInfo[] }>(
      "/v1/estimators",
    );
    return body.estimators;
  }

  async chat(
    messages: ChatMessage[],
    model: string,
    estimator: string,
    apiKey: string,
    params?: ChatParams,
  ): Promise<ChatTurnResult> {
    const request: ChatRequest = { messages, model, estimator };
    if (params) request.params = params;
    if (apiKey) request.api_key = apiKey;
    return this.request<ChatTurnResult>("/v1/chat", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(request),
    });
  }
}
