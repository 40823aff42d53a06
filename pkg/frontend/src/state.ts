// Chat view state and its pure transition functions. The UI never
// computes uncertainty itself; every number in the transcript originates
// in a service response.

import { ApiError } from "./api.js";
import type { ChatTurnResult, EstimatorInfo } from "./types.js";

export interface TranscriptTurn {
  role: "user" | "assistant";
  text: string;
  estimator?: string;
  confidence?: number;
  uncertaintyRaw?: number;
  samples?: { text: string; total_logprob: number | null }[];
}

export interface ChatViewState {
  transcript: TranscriptTurn[];
  selectedModel: string;
  selectedEstimator: string;
  apiKey: string; // held in memory only, sent per request, never persisted
  inFlight: boolean;
  errorHint: string | null;
  estimators: EstimatorInfo[];
  models: string[];
  serviceDown: boolean;
}

export function initialState(): ChatViewState {
  return {
    transcript: [],
    selectedModel: "",
    selectedEstimator: "",
    apiKey: "",
    inFlight: false,
    errorHint: null,
    estimators: [],
    models: [],
    serviceDown: false,
  };
}

export function canSend(state: ChatViewState, text: string): boolean {
  return (
    !state.inFlight &&
    text.trim().length > 0 &&
    state.selectedModel !== "" &&
    state.selectedEstimator !== ""
  );
}

export function beginTurn(state: ChatViewState, text: string): ChatViewState {
  return {
    ...state,
    transcript: [...state.transcript, { role: "user", text }],
    inFlight: true,
    errorHint: null,
  };
}

export function completeTurn(
  state: ChatViewState,
  result: ChatTurnResult,
): ChatViewState {
  const turn: TranscriptTurn = {
    role: "assistant",
    text: result.text,
    estimator: result.estimator,
    uncertaintyRaw: result.uncertainty_raw,
  };
  if (result.confidence !== undefined && result.confidence !== null) {
    turn.confidence = result.confidence;
  }
  if (result.diagnostics?.samples) {
    turn.samples = result.diagnostics.samples;
  }
  return {
    ...state,
    transcript: [...state.transcript, turn],
    inFlight: false,
    errorHint: null,
  };
}

/** Turn a capability rejection into advice the user can act on. */
export function actionableHint(detail: string): string {
  const lower = detail.toLowerCase();
  if (
    lower.includes("logprob") ||
    lower.includes("embedding") ||
    lower.includes("ensemble")
  ) {
    return (
      `${detail} — try a black-box estimator such as ` +
      `lexical_similarity_rougeL; it only needs sampled texts.`
    );
  }
  if (lower.includes("samples")) {
    return `${detail} — raise num_samples to at least 2.`;
  }
  if (lower.includes("nli")) {
    return `${detail} — pick a Jaccard-kernel variant instead.`;
  }
  return detail;
}

export function failTurn(state: ChatViewState, err: unknown): ChatViewState {
  let hint: string;
  if (err instanceof ApiError && err.status === 422) {
    hint = actionableHint(err.detail);
  } else if (err instanceof ApiError) {
    hint = err.detail || err.message;
  } else {
    hint = String(err);
  }
  // transcript keeps the user turn; the failure renders as an inline hint
  return { ...state, inFlight: false, errorHint: hint };
}

export interface EstimatorGroup {
  category: string;
  entries: EstimatorInfo[];
}

/** Group the registry listing by category, keeping service order. */
export function groupEstimators(entries: EstimatorInfo[]): EstimatorGroup[] {
  const groups: EstimatorGroup[] = [];
  const index = new Map<string, EstimatorGroup>();
  for (const entry of entries) {
    let group = index.get(entry.category);
    if (!group) {
      group = { category: entry.category, entries: [] };
      index.set(entry.category, group);
      groups.push(group);
    }
    group.entries.push(entry);
  }
  return groups;
}
