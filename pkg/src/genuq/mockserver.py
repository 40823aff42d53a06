"""Deterministic mock model + NLI provider (WSGI app).

Implements just enough of the OpenAI-compatible wire protocol for the
gateway, plus the pairwise NLI contract, with fully deterministic output:
every response is a pure function of the request payload. Sampling
variety comes from the request's `seed` field; temperature 0 ignores the
seed, so the greedy pass is stable. That makes end-to-end runs and the
service statelessness test byte-reproducible.

Routes:
    POST /v1/chat/completions   chat with logprobs/top_logprobs
    POST /v1/completions        echo scoring (max_tokens=0, echo=true)
    POST /v1/nli                {"pairs": [[premise, hypothesis], ...]}
    GET  /v1/health             liveness
    GET  /__stats__             {"max_concurrent", "requests"} (test aid)
    POST /__reset__             reset the stats counters

Special model names steer failure modes for tests: "error-401" -> 401,
"error-500" -> 500 on every call, "flaky-500" -> 500 twice then success,
"no-logprobs" -> completions without logprob fields.

Run standalone with `genuq mock-server`; in tests, mount the app through
httpx.WSGITransport so no socket is involved.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
import threading
import time
import zlib

WORDS = (
    "alpha bravo charlie delta echo foxtrot golf hotel india juliet kilo "
    "lima mike november oscar papa quebec romeo sierra tango uniform victor "
    "whiskey xray yankee zulu amber birch cedar dune ember flint"
).split()

SELF_CHECK_MARKER = "Answer True or False:"


def _rng(*parts) -> random.Random:
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _uncond_logprob(token_text: str) -> float:
    word = token_text.strip()
    return -(0.1 + (zlib.crc32(word.encode()) % 80) / 100.0)


def _jaccard(a: str, b: str) -> float:
    sa, sb = set(a.lower().split()), set(b.lower().split())
    if not sa and not sb:
        return 1.0
    return len(sa & sb) / len(sa | sb)


class MockLlmApp:
    """WSGI callable; see module docstring."""

    def __init__(self, delay: float = 0.0):
        self.delay = delay
        self._lock = threading.Lock()
        self._inflight = 0
        self.max_concurrent = 0
        self.requests = 0
        self._flaky_failures: dict[str, int] = {}

    # -- deterministic generation --------------------------------------

    def _completion_tokens(self, prompt: str, seed: int, temperature: float,
                           max_tokens: int, k: int) -> list[dict]:
        if temperature == 0:
            rng = _rng(prompt, "greedy")
        else:
            rng = _rng(prompt, seed, temperature)
        length = max(1, min(max_tokens, 3 + rng.randrange(5)))
        steps = []
        for pos in range(length):
            word = WORDS[rng.randrange(len(WORDS))]
            text = word if pos == 0 else " " + word
            p = 0.45 + 0.5 * rng.random()
            top = [{"token": text, "logprob": math.log(p)}]
            others = [w for w in WORDS if w != word]
            rng.shuffle(others)
            rem = (1.0 - p) * 0.95
            weights = [0.5 ** i for i in range(1, k)]
            scale = rem / sum(weights) if weights else 0.0
            for i, other in enumerate(others[:k - 1]):
                q = weights[i] * scale
                alt_text = other if pos == 0 else " " + other
                top.append({"token": alt_text, "logprob": math.log(q)})
            steps.append({"token": text, "logprob": math.log(p),
                          "top_logprobs": top})
        return steps

    def _chat_completion(self, payload: dict) -> dict:
        prompt = "\n".join(m.get("content", "")
                           for m in payload.get("messages", []))
        seed = int(payload.get("seed", 0))
        temperature = float(payload.get("temperature", 1.0))
        max_tokens = int(payload.get("max_tokens", 16))
        want_logprobs = bool(payload.get("logprobs"))
        k = int(payload.get("top_logprobs", 5))

        if SELF_CHECK_MARKER in prompt:
            rng = _rng(prompt, "self-check")
            p_true = 0.05 + 0.9 * rng.random()
            answer = "True" if p_true >= 0.5 else "False"
            lp = math.log(p_true if answer == "True" else 1 - p_true)
            content = [{
                "token": answer, "logprob": lp,
                "top_logprobs": [
                    {"token": "True", "logprob": math.log(p_true)},
                    {"token": "False", "logprob": math.log(1 - p_true)},
                ],
            }]
            text = answer
        else:
            content = self._completion_tokens(prompt, seed, temperature,
                                              max_tokens, k)
            text = "".join(s["token"] for s in content)

        choice: dict = {
            "index": 0,
            "message": {"role": "assistant", "content": text},
            "finish_reason": "stop",
        }
        if want_logprobs and payload.get("model") != "no-logprobs":
            choice["logprobs"] = {"content": content}
        return {"object": "chat.completion",
                "model": payload.get("model", "mock"),
                "choices": [choice]}

    def _echo_completion(self, payload: dict) -> dict:
        text = payload.get("prompt", "")
        words = text.split(" ") if text else []
        tokens = [w if i == 0 else " " + w for i, w in enumerate(words)]
        if payload.get("model") == "no-logprobs":
            return {"object": "text_completion",
                    "choices": [{"index": 0, "text": text}]}
        return {
            "object": "text_completion",
            "choices": [{
                "index": 0,
                "text": text,
                "logprobs": {
                    "tokens": tokens,
                    "token_logprobs": [_uncond_logprob(t) for t in tokens],
                },
            }],
        }

    def _nli(self, payload: dict) -> dict:
        scores = []
        for premise, hypothesis in payload["pairs"]:
            if premise.strip().lower() == hypothesis.strip().lower():
                e, c = 0.95, 0.02
            else:
                j = _jaccard(premise, hypothesis)
                e, c = 0.1 + 0.8 * j, 0.8 * (1.0 - j)
            scores.append({"entail": e, "contra": c,
                           "neutral": 1.0 - e - c})
        return {"scores": scores}

    # -- WSGI plumbing --------------------------------------------------

    def __call__(self, environ, start_response):
        with self._lock:
            self._inflight += 1
            self.requests += 1
            self.max_concurrent = max(self.max_concurrent, self._inflight)
        try:
            if self.delay:
                time.sleep(self.delay)
            return self._dispatch(environ, start_response)
        finally:
            with self._lock:
                self._inflight -= 1

    def _dispatch(self, environ, start_response):
        path = environ.get("PATH_INFO", "")
        method = environ.get("REQUEST_METHOD", "GET")

        def respond(status: str, obj: dict):
            body = json.dumps(obj).encode()
            start_response(status, [("Content-Type", "application/json"),
                                    ("Content-Length", str(len(body)))])
            return [body]

        if method == "GET" and path == "/v1/health":
            return respond("200 OK", {"status": "ok"})
        if method == "GET" and path == "/__stats__":
            return respond("200 OK", {"max_concurrent": self.max_concurrent,
                                      "requests": self.requests})
        if method == "POST" and path == "/__reset__":
            with self._lock:
                self.max_concurrent = 0
                self.requests = 0
                self._flaky_failures.clear()
            return respond("200 OK", {"status": "reset"})

        if method != "POST":
            return respond("404 Not Found", {"error": "unknown route"})
        try:
            size = int(environ.get("CONTENT_LENGTH") or 0)
            payload = json.loads(environ["wsgi.input"].read(size) or b"{}")
        except (ValueError, KeyError):
            return respond("400 Bad Request", {"error": "bad JSON body"})

        model = payload.get("model", "")
        if model == "error-401":
            return respond("401 Unauthorized", {"error": "invalid api key"})
        if model == "error-500":
            return respond("500 Internal Server Error", {"error": "boom"})
        if model == "flaky-500":
            with self._lock:
                n = self._flaky_failures.get(path, 0)
                self._flaky_failures[path] = n + 1
            if n < 2:
                return respond("500 Internal Server Error",
                               {"error": "transient"})

        if path == "/v1/chat/completions":
            return respond("200 OK", self._chat_completion(payload))
        if path == "/v1/completions":
            return respond("200 OK", self._echo_completion(payload))
        if path == "/v1/nli":
            try:
                return respond("200 OK", self._nli(payload))
            except (KeyError, TypeError, ValueError):
                return respond("400 Bad Request", {"error": "bad NLI payload"})
        return respond("404 Not Found", {"error": "unknown route"})


def serve(host: str = "127.0.0.1", port: int = 8770,
          delay: float = 0.0) -> None:  # pragma: no cover - manual use
    """Serve the mock on a threading WSGI server (ctrl-c to stop)."""
    import socketserver
    from wsgiref.simple_server import WSGIServer, make_server

    class ThreadingWSGIServer(socketserver.ThreadingMixIn, WSGIServer):
        daemon_threads = True

    app = MockLlmApp(delay=delay)
    with make_server(host, port, app, server_class=ThreadingWSGIServer) as srv:
        print(f"mock model + NLI provider on http://{host}:{port}")
        srv.serve_forever()
