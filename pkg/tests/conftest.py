import math

import pytest

from genuq.records import (EnsembleTrace, GenerationRecord, SampledOutput,
                           TokenStep)


def step(logprob: float, token_id: int = 1, text: str = "tok",
         alternatives=None, unconditional=None) -> TokenStep:
    return TokenStep(token_id=token_id, token_text=text, logprob=logprob,
                     alternatives=tuple(alternatives or ()),
                     unconditional_logprob=unconditional)


def uniform_step(n_outcomes: int, token_id: int = 0) -> TokenStep:
    """A step whose alternatives are uniform over n outcomes, full mass."""
    lp = math.log(1.0 / n_outcomes)
    alts = tuple((i, lp) for i in range(n_outcomes))
    return TokenStep(token_id=token_id, token_text="tok", logprob=lp,
                     alternatives=alts)


def sample(total_logprob: float, length: int = 1, text: str = "resp"):
    return SampledOutput(text=text, total_logprob=total_logprob, length=length)


def record(steps=(), samples=(), traces=(), **kwargs) -> GenerationRecord:
    defaults = dict(id="r0", input_text="in", output_text="out")
    defaults.update(kwargs)
    return GenerationRecord(output_tokens=tuple(steps),
                            samples=tuple(samples),
                            ensemble_traces=tuple(traces), **defaults)


def constant_prob_traces(greedy_probs_per_member, token_id: int = 1,
                         other_id: int = 2):
    """One trace per member; at every step member i gives the greedy token
    its listed probability and the rest to one other token."""
    n_steps = len(greedy_probs_per_member[0])
    traces = []
    for m, probs in enumerate(greedy_probs_per_member):
        assert len(probs) == n_steps
        steps = tuple(
            ((token_id, p), (other_id, 1.0 - p)) if p < 1.0
            else ((token_id, 1.0),)
            for p in probs)
        traces.append(EnsembleTrace(model_id=f"m{m}", steps=steps))
    return traces


@pytest.fixture
def mock_app():
    from genuq.mockserver import MockLlmApp
    return MockLlmApp()


@pytest.fixture
def mock_transport(mock_app):
    import httpx
    return httpx.WSGITransport(app=mock_app)
