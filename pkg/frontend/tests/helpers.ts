// Shared stub service for frontend tests: records every request and
// serves canned responses, so no test touches the network.

import type { FetchLike } from "../src/api.js";
import type { EstimatorInfo } from "../src/types.js";

export interface RecordedRequest {
  url: string;
  body: string;
  method: string;
}

export const ESTIMATORS: EstimatorInfo[] = [
  {
    name: "msp",
    display_name: "Maximum sequence probability",
    family: "max_sequence_probability",
    type: "whitebox",
    category: "information",
    compute: "Low",
    memory: "Low",
    needs_training_data: false,
    requires: ["token_logprobs"],
  },
  {
    name: "mc_sequence_entropy",
    display_name: "Monte Carlo sequence entropy",
    family: "mc_sequence_entropy",
    type: "whitebox",
    category: "information",
    compute: "High",
    memory: "Low",
    needs_training_data: false,
    requires: ["samples", "sample_logprobs"],
  },
  {
    name: "lexical_similarity_rougeL",
    display_name: "Lexical similarity (rougeL)",
    family: "lexical_similarity",
    type: "blackbox",
    category: "meaning_diversity",
    compute: "High",
    memory: "Low",
    needs_training_data: false,
    requires: ["samples"],
  },
  {
    name: "mahalanobis",
    display_name: "Mahalanobis distance",
    family: "mahalanobis_distance",
    type: "whitebox",
    category: "density",
    compute: "Low",
    memory: "Low",
    needs_training_data: true,
    requires: ["embedding", "density_fit"],
  },
];

export interface StubOptions {
  chatStatus?: number;
  chatBody?: unknown;
  healthFails?: boolean;
}

export function stubService(options: StubOptions = {}): {
  fetch: FetchLike;
  requests: RecordedRequest[];
} {
  const requests: RecordedRequest[] = [];
  const json = (status: number, body: unknown) =>
    new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });

  const fetchImpl: FetchLike = async (url, init) => {
    requests.push({
      url,
      method: init?.method ?? "GET",
      body: typeof init?.body === "string" ? init.body : "",
    });
    if (url.endsWith("/v1/health")) {
      if (options.healthFails) throw new Error("connection refused");
      return json(200, { status: "ok", models: ["mock", "hosted-model"] });
    }
    if (url.endsWith("/v1/estimators")) {
      return json(200, { estimators: ESTIMATORS });
    }
    if (url.endsWith("/v1/chat")) {
      return json(
        options.chatStatus ?? 200,
        options.chatBody ?? {
          text: "the answer is alpha",
          estimator: "msp",
          uncertainty_raw: 0.125,
          confidence: 0.9,
        },
      );
    }
    return json(404, { detail: "unknown route" });
  };
  return { fetch: fetchImpl, requests };
}
