// Wire types of the genuq service HTTP API.

export interface ChatMessage {
  role: "user" | "assistant";
  content: string;
}

export interface ChatParams {
  max_new_tokens?: number;
  temperature?: number;
  top_p?: number;
  num_samples?: number;
  logprobs_k?: number;
}

export interface ChatRequest {
  messages: ChatMessage[];
  model: string;
  estimator: string;
  params?: ChatParams;
  api_key?: string;
}

export interface SampleDiagnostic {
  text: string;
  total_logprob: number | null;
}

export interface ChatTurnResult {
  text: string;
  estimator: string;
  uncertainty_raw: number;
  confidence?: number;
  diagnostics?: { samples: SampleDiagnostic[] };
}

export interface EstimatorInfo {
  name: string;
  display_name: string;
  family: string;
  type: string;
  category: string;
  compute: "Low" | "Medium" | "High";
  memory: string;
  needs_training_data: boolean;
  requires: string[];
}

export interface HealthInfo {
  status: string;
  kernel_backend?: string;
  models: string[];
}
