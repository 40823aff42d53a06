// Wiring: state container + API client + render loop.

import { ApiClient } from "./api.js";
import {
  beginTurn,
  completeTurn,
  failTurn,
  initialState,
  type ChatViewState,
} from "./state.js";
import { render, type Handlers } from "./view.js";

export function startApp(root: HTMLElement, client: ApiClient): void {
  let state: ChatViewState = initialState();

  const update = (next: ChatViewState) => {
    state = next;
    render(root, state, handlers);
  };

  const loadMenus = async () => {
    try {
      const [health, estimators] = await Promise.all([
        client.health(),
        client.estimators(),
      ]);
      update({
        ...state,
        serviceDown: false,
        models: health.models,
        estimators,
        selectedModel: state.selectedModel || health.models[0] || "",
        selectedEstimator:
          state.selectedEstimator || estimators[0]?.name || "",
      });
    } catch {
      update({ ...state, serviceDown: true });
    }
  };

  const handlers: Handlers = {
    onSend(text) {
      update(beginTurn(state, text));
      client
        .chat(
          [{ role: "user", content: text }],
          state.selectedModel,
          state.selectedEstimator,
          state.apiKey,
        )
        .then((result) => update(completeTurn(state, result)))
        .catch((err) => update(failTurn(state, err)));
    },
    onModelChange(model) {
      update({ ...state, selectedModel: model });
    },
    onEstimatorChange(name) {
      update({ ...state, selectedEstimator: name });
    },
    onApiKeyChange(key) {
      // memory only: the key is sent per chat request, never stored
      state = { ...state, apiKey: key };
    },
    onRetry() {
      void loadMenus();
    },
  };

  render(root, state, handlers);
  void loadMenus();
}

declare global {
  interface Window {
    GENUQ_BASE_URL?: string;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  const root = document.getElementById("app") as HTMLElement;
  startApp(root, new ApiClient(window.GENUQ_BASE_URL ?? ""));
}
