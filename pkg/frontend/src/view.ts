// DOM rendering. The whole app re-renders from state on every change;
// at chat scale that is simpler and fast enough.

import type { ChatViewState, TranscriptTurn } from "./state.js";
import { canSend, groupEstimators } from "./state.js";
import type { EstimatorInfo } from "./types.js";

export const HIGH_COST_WARNING =
  "High compute cost: needs sampling or extra model passes, expect latency";

export interface Handlers {
  onSend(text: string): void;
  onModelChange(model: string): void;
  onEstimatorChange(name: string): void;
  onApiKeyChange(key: string): void;
  onRetry(): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function confidenceClass(confidence: number): string {
  if (confidence >= 0.66) return "confidence-high";
  if (confidence >= 0.33) return "confidence-medium";
  return "confidence-low";
}

export function renderConfidenceBadge(turn: TranscriptTurn): HTMLElement {
  const badge = el("span", "badge");
  if (turn.confidence !== undefined) {
    badge.classList.add(confidenceClass(turn.confidence));
    badge.textContent = `${Math.round(turn.confidence * 100)}% confidence`;
    // the untouched service value, for anything that needs it verbatim
    badge.dataset.confidence = String(turn.confidence);
  } else {
    badge.classList.add("confidence-unknown");
    badge.textContent = "uncalibrated";
  }
  if (turn.estimator) {
    badge.append(" ");
    badge.append(el("span", "badge-estimator", turn.estimator));
  }
  return badge;
}

function renderTurn(turn: TranscriptTurn): HTMLElement {
  const node = el("div", `turn turn-${turn.role}`);
  node.append(el("div", "turn-text", turn.text));
  if (turn.role === "assistant") {
    node.append(renderConfidenceBadge(turn));
    const diag = el("details", "diagnostics");
    diag.append(el("summary", "", "diagnostics"));
    if (turn.uncertaintyRaw !== undefined) {
      const raw = el("div", "raw-uncertainty",
        `raw uncertainty: ${turn.uncertaintyRaw}`);
      raw.dataset.uncertaintyRaw = String(turn.uncertaintyRaw);
      diag.append(raw);
    }
    for (const sample of turn.samples ?? []) {
      diag.append(el("div", "sample", sample.text));
    }
    node.append(diag);
  }
  return node;
}

function renderEstimatorSelect(
  state: ChatViewState,
  handlers: Handlers,
): HTMLElement {
  const select = el("select", "estimator-select");
  select.id = "estimator";
  select.disabled = state.serviceDown || state.estimators.length === 0;
  for (const group of groupEstimators(state.estimators)) {
    const optgroup = document.createElement("optgroup");
    optgroup.label = group.category;
    for (const entry of group.entries) {
      optgroup.append(renderEstimatorOption(entry, state.selectedEstimator));
    }
    select.append(optgroup);
  }
  select.addEventListener("change", () =>
    handlers.onEstimatorChange(select.value),
  );
  return select;
}

function renderEstimatorOption(
  entry: EstimatorInfo,
  selected: string,
): HTMLOptionElement {
  const option = document.createElement("option");
  option.value = entry.name;
  option.selected = entry.name === selected;
  option.textContent =
    entry.compute === "High"
      ? `${entry.display_name} ⚠`
      : entry.display_name;
  if (entry.compute === "High") {
    option.title = HIGH_COST_WARNING;
    option.classList.add("high-cost");
  }
  return option;
}

export function render(
  root: HTMLElement,
  state: ChatViewState,
  handlers: Handlers,
): void {
  root.textContent = "";

  if (state.serviceDown) {
    const banner = el("div", "banner banner-error");
    banner.append(el("span", "", "Service unreachable."));
    const retry = el("button", "retry", "Retry");
    retry.addEventListener("click", handlers.onRetry);
    banner.append(retry);
    root.append(banner);
  }

  const controls = el("div", "controls");
  const modelSelect = el("select", "model-select");
  modelSelect.id = "model";
  modelSelect.disabled = state.serviceDown || state.models.length === 0;
  for (const model of state.models) {
    const option = document.createElement("option");
    option.value = model;
    option.textContent = model;
    option.selected = model === state.selectedModel;
    modelSelect.append(option);
  }
  modelSelect.addEventListener("change", () =>
    handlers.onModelChange(modelSelect.value),
  );
  controls.append(labelled("Model", modelSelect));
  controls.append(labelled("Estimator", renderEstimatorSelect(state, handlers)));

  const keyInput = el("input", "api-key");
  keyInput.id = "api-key";
  keyInput.type = "password";
  keyInput.placeholder = "API key (hosted models)";
  keyInput.autocomplete = "off";
  keyInput.value = state.apiKey;
  keyInput.addEventListener("input", () =>
    handlers.onApiKeyChange(keyInput.value),
  );
  controls.append(labelled("API key", keyInput));
  root.append(controls);

  const transcript = el("div", "transcript");
  for (const turn of state.transcript) {
    transcript.append(renderTurn(turn));
  }
  if (state.inFlight) {
    transcript.append(el("div", "turn turn-pending", "thinking…"));
  }
  root.append(transcript);

  if (state.errorHint) {
    root.append(el("div", "hint hint-error", state.errorHint));
  }

  const composer = el("div", "composer");
  const input = el("textarea", "composer-input");
  input.id = "composer";
  input.placeholder = "Ask something…";
  const send = el("button", "send", "Send");
  send.id = "send";
  const sync = () => {
    send.disabled = !canSend(state, input.value);
  };
  sync();
  input.addEventListener("input", sync);
  send.addEventListener("click", () => {
    if (canSend(state, input.value)) handlers.onSend(input.value.trim());
  });
  input.addEventListener("keydown", (event) => {
    if (event.key === "Enter" && !event.shiftKey) {
      event.preventDefault();
      if (canSend(state, input.value)) handlers.onSend(input.value.trim());
    }
  });
  composer.append(input, send);
  root.append(composer);
}

function labelled(text: string, control: HTMLElement): HTMLElement {
  const wrap = el("label", "field");
  wrap.append(el("span", "field-label", text), control);
  return wrap;
}
