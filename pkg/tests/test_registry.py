import math

import numpy as np
import pytest

from genuq.density import DensityArtifacts, HuqConfig, fit_gaussian, fit_rde
from genuq.errors import GenUqError, UnavailableInputError, UsageError
from genuq.meaning import PairwiseScores
from genuq.records import SampledOutput, TokenStep
from genuq.registry import (ROSTER_FAMILIES, EstimatorContext,
                            default_registry)

from conftest import constant_prob_traces, record


def jaccard_nli(texts):
    k = len(texts)
    entail, contra = np.eye(k), np.zeros((k, k))
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            same = texts[i] == texts[j]
            entail[i, j] = 0.9 if same else 0.1
            contra[i, j] = 0.05 if same else 0.8
    return PairwiseScores(entail=entail, contra=contra)


def rich_record():
    steps = tuple(
        TokenStep(token_id=i, token_text=f"t{i}", logprob=math.log(0.5),
                  alternatives=((i, math.log(0.5)), (99, math.log(0.4))),
                  unconditional_logprob=math.log(0.25))
        for i in range(2))
    samples = tuple(
        SampledOutput(text=t, total_logprob=math.log(p), length=2)
        for t, p in [("yes sir", 0.3), ("yes sir", 0.25), ("no way", 0.1)])
    traces = constant_prob_traces([[0.5, 0.5], [0.7, 0.7]], token_id=0)
    # both traces must cover both token ids (0 and 1)
    from genuq.records import EnsembleTrace
    traces = (
        EnsembleTrace("m0", (((0, 0.5), (1, 0.5)), ((1, 0.6), (0, 0.4)))),
        EnsembleTrace("m1", (((0, 0.7), (1, 0.3)), ((1, 0.5), (0, 0.5)))),
    )
    return record(steps=steps, samples=samples, traces=traces,
                  embedding=(0.5, -0.25, 1.0, 0.0),
                  reference_text="t0 t1", p_true=0.8)


def full_context():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(40, 4))
    density = DensityArtifacts(
        fit=fit_gaussian(x),
        background=fit_gaussian(rng.normal(size=(40, 4)) + 2),
        rde=fit_rde(x, target_dim=2))
    huq = HuqConfig(alpha=0.5,
                    calibration_density=tuple(np.linspace(0, 50, 20)),
                    calibration_info=tuple(np.linspace(1, 9, 20)))
    return EstimatorContext(nli=jaccard_nli, density=density, huq=huq)


class TestRoster:
    def test_all_families_present(self):
        assert default_registry().families() >= ROSTER_FAMILIES

    def test_names_unique_and_stable(self):
        a = default_registry().names()
        b = default_registry().names()
        assert a == b
        assert len(a) == len(set(a))

    def test_cost_tags_valid(self):
        for entry in default_registry().entries():
            assert entry.compute_cost in ("Low", "Medium", "High")
            assert entry.memory_cost in ("Low", "Medium", "High")

    def test_unknown_name_lists_valid(self):
        with pytest.raises(UsageError, match="msp"):
            default_registry().get("nope")

    def test_without_disables_entry(self):
        reg = default_registry().without({"msp"})
        assert "msp" not in reg.names()
        with pytest.raises(UsageError):
            reg.get("msp")


class TestComputeAll:
    def test_every_entry_scores_rich_record(self):
        reg = default_registry()
        ctx = full_context()
        r = rich_record()
        for entry in reg.entries():
            value = entry.fn(r, ctx)
            assert isinstance(value, float) or isinstance(value, int), entry.name
            assert math.isfinite(float(value)), entry.name

    def test_missing_inputs_fail_typed_never_crash(self):
        reg = default_registry()
        ctx = EstimatorContext()  # no NLI, no density, no huq
        bare = record()  # nothing at all
        for entry in reg.entries():
            if entry.name == "constant":
                assert entry.fn(bare, ctx) == 0.0
                continue
            with pytest.raises(GenUqError):
                entry.fn(bare, ctx)

    def test_nli_scores_cached_per_record(self):
        calls = []

        def counting_nli(texts):
            calls.append(len(texts))
            return jaccard_nli(texts)

        ctx = full_context()
        ctx.nli = counting_nli
        r = rich_record()
        reg = default_registry()
        reg.compute("num_semantic_sets", r, ctx)
        reg.compute("semantic_entropy", r, ctx)
        reg.compute("eigv_laplacian_nli_entail", r, ctx)
        assert len(calls) == 1

    def test_oracle_and_constant(self):
        reg = default_registry()
        ctx = EstimatorContext()
        r = record(output_text="a b", reference_text="a b")
        assert reg.compute("oracle", r, ctx) == -1.0
        assert reg.compute("constant", r, ctx) == 0.0
        with pytest.raises(UnavailableInputError):
            reg.compute("oracle", record(), ctx)

    def test_huq_wiring(self):
        ctx = full_context()
        r = rich_record()
        reg = default_registry()
        value = reg.compute("huq_md", r, ctx)
        assert 0.0 <= value <= 1.0
        alpha1 = EstimatorContext(nli=ctx.nli, density=ctx.density,
                                  huq=HuqConfig(
                                      alpha=1.0,
                                      calibration_density=ctx.huq.calibration_density,
                                      calibration_info=ctx.huq.calibration_info))
        from genuq.density import mahalanobis
        md = mahalanobis(ctx.density.fit, np.asarray(r.embedding))
        want = sum(1 for v in ctx.huq.calibration_density if v <= md) / 20
        assert reg.compute("huq_md", r, alpha1) == pytest.approx(want)
