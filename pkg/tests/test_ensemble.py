import math

import numpy as np
import pytest

from genuq.ensemble import (EPSILON_FLOOR, StepDistributionSet,
                            aggregate_token_measure, align_distributions,
                            seq_msp_ensemble, seq_rmi, step_distribution_sets,
                            token_measures)
from genuq.errors import AlignmentError, UnavailableInputError
from genuq.records import EnsembleTrace

from conftest import constant_prob_traces, record, step


def kl_bruteforce(p, q):
    return sum(pi * math.log(pi / qi) for pi, qi in zip(p, q))


def epkl_bruteforce(rows):
    """Double loop over ordered pairs divided by M(M-1)."""
    m = len(rows)
    total = 0.0
    for i in range(m):
        for j in range(m):
            if i != j:
                total += kl_bruteforce(rows[i], rows[j])
    return total / (m * (m - 1))


def two_member_step():
    return StepDistributionSet(
        support=(1, 2),
        probs=np.array([[0.75, 0.25], [0.25, 0.75]]))


class TestTokenMeasures:
    def test_identical_members(self):
        s = StepDistributionSet(support=(1, 2),
                                probs=np.array([[0.6, 0.4], [0.6, 0.4]]))
        got = token_measures(s)
        member_entropy = -(0.6 * math.log(0.6) + 0.4 * math.log(0.4))
        assert got["mi"] == pytest.approx(0.0, abs=1e-12)
        assert got["epkl"] == pytest.approx(0.0, abs=1e-12)
        assert got["rmi"] == pytest.approx(0.0, abs=1e-12)
        assert got["total_entropy"] == pytest.approx(member_entropy)
        assert got["data_uncertainty"] == pytest.approx(member_entropy)

    def test_hand_computed_pair(self):
        got = token_measures(two_member_step())
        assert got["total_entropy"] == pytest.approx(math.log(2), abs=1e-12)
        data = -(0.75 * math.log(0.75) + 0.25 * math.log(0.25))
        assert got["data_uncertainty"] == pytest.approx(data, abs=1e-12)
        assert got["mi"] == pytest.approx(math.log(2) - data, abs=1e-12)
        assert got["epkl"] == pytest.approx(0.5 * math.log(3), abs=1e-12)
        assert got["rmi"] == pytest.approx(
            0.5 * math.log(3) - (math.log(2) - data), abs=1e-12)
        # frozen reference magnitudes
        assert got["mi"] == pytest.approx(0.1308, abs=1e-4)
        assert got["epkl"] == pytest.approx(0.5493, abs=1e-4)
        assert got["rmi"] == pytest.approx(0.4185, abs=1e-4)

    def test_one_hot_agreement(self):
        aligned = align_distributions([[(1, 1.0)], [(1, 1.0)]])
        got = token_measures(aligned)
        for key in ("total_entropy", "data_uncertainty", "mi", "epkl", "rmi"):
            assert got[key] == pytest.approx(0.0, abs=1e-9)

    def test_epkl_matches_bruteforce_on_random(self):
        rng = np.random.default_rng(21)
        for _ in range(500):
            m = int(rng.integers(2, 6))
            v = int(rng.integers(2, 7))
            probs = rng.dirichlet(np.ones(v), size=m)
            s = StepDistributionSet(support=tuple(range(v)), probs=probs)
            got = token_measures(s)
            assert got["epkl"] == pytest.approx(
                epkl_bruteforce(probs), abs=1e-10)
            assert got["mi"] >= -1e-9
            assert got["rmi"] >= -1e-9

    def test_member_permutation_invariance(self):
        rng = np.random.default_rng(3)
        probs = rng.dirichlet(np.ones(4), size=3)
        a = token_measures(StepDistributionSet(support=(0, 1, 2, 3),
                                               probs=probs))
        b = token_measures(StepDistributionSet(support=(0, 1, 2, 3),
                                               probs=probs[::-1]))
        for key in a:
            assert a[key] == pytest.approx(b[key], abs=1e-12)

    def test_ragged_input_alignment_error(self):
        with pytest.raises(AlignmentError):
            StepDistributionSet(support=(1, 2),
                                probs=np.array([[1.0], [0.5]]))


class TestSequenceMeasures:
    def test_msp_all_certain(self):
        traces = constant_prob_traces([[1.0, 1.0], [1.0, 1.0]])
        r = record(steps=[step(-0.1), step(-0.1)], traces=traces)
        assert seq_msp_ensemble(r) == pytest.approx(0.0, abs=1e-9)

    def test_msp_hand_case(self):
        # constant per-step probs make the normalized probability equal
        # to the per-step value: members 0.6 and 0.8 -> 1 - 0.7
        traces = constant_prob_traces([[0.6, 0.6], [0.8, 0.8]])
        r = record(steps=[step(-0.1), step(-0.1)], traces=traces)
        assert seq_msp_ensemble(r) == pytest.approx(0.3, abs=1e-9)

    def test_msp_floored_member(self):
        traces = constant_prob_traces([[0.0], [0.8]])
        r = record(steps=[step(-0.1)], traces=traces)
        assert seq_msp_ensemble(r) == pytest.approx(1 - 0.4, abs=1e-6)

    def test_rmi_identical_members(self):
        traces = constant_prob_traces([[0.5], [0.5]])
        r = record(steps=[step(-0.1)], traces=traces)
        assert seq_rmi(r) == pytest.approx(0.0, abs=1e-12)

    def test_rmi_hand_case(self):
        traces = constant_prob_traces([[0.25], [0.75]])
        r = record(steps=[step(-0.1)], traces=traces)
        want = (math.log(2) + math.log(2 / 3)) / 2
        assert seq_rmi(r) == pytest.approx(want, abs=1e-12)
        assert seq_rmi(r) == pytest.approx(0.1438, abs=1e-4)

    def test_rmi_member_permutation(self):
        a = constant_prob_traces([[0.25], [0.75]])
        b = constant_prob_traces([[0.75], [0.25]])
        ra = record(steps=[step(-0.1)], traces=a)
        rb = record(steps=[step(-0.1)], traces=b)
        assert seq_rmi(ra) == pytest.approx(seq_rmi(rb), abs=1e-12)

    def test_needs_two_traces(self):
        r = record(steps=[step(-0.1)],
                   traces=constant_prob_traces([[0.5]]))
        with pytest.raises(UnavailableInputError):
            seq_msp_ensemble(r)

    def test_misaligned_trace(self):
        traces = (EnsembleTrace("m0", (((1, 1.0),),)),
                  EnsembleTrace("m1", (((1, 1.0),), ((1, 1.0),))))
        r = record(steps=[step(-0.1)], traces=traces)
        with pytest.raises(AlignmentError):
            seq_msp_ensemble(r)


class TestAggregation:
    def test_identical_members_zero(self):
        traces = constant_prob_traces([[0.5, 0.5], [0.5, 0.5]])
        r = record(steps=[step(-0.1), step(-0.1)], traces=traces)
        for measure in ("mi", "epkl", "rmi"):
            assert aggregate_token_measure(r, measure) == pytest.approx(
                0.0, abs=1e-9)

    def test_two_steps_double_single(self):
        traces = (EnsembleTrace("m0", (((1, 0.75), (2, 0.25)),
                                       ((1, 0.75), (2, 0.25)))),
                  EnsembleTrace("m1", (((1, 0.25), (2, 0.75)),
                                       ((1, 0.25), (2, 0.75)))))
        r = record(steps=[step(-0.1), step(-0.1)], traces=traces)
        single = token_measures(two_member_step())["mi"]
        assert aggregate_token_measure(r, "mi") == pytest.approx(
            2 * single, abs=1e-9)
        assert aggregate_token_measure(r, "mi") == pytest.approx(
            0.2616, abs=1e-3)
        assert aggregate_token_measure(r, "mi", average=True) == pytest.approx(
            single, abs=1e-9)

    def test_single_step_equals_token_measure(self):
        traces = (EnsembleTrace("m0", (((1, 0.75), (2, 0.25)),)),
                  EnsembleTrace("m1", (((1, 0.25), (2, 0.75)),)))
        r = record(steps=[step(-0.1)], traces=traces)
        sets = step_distribution_sets(r)
        assert aggregate_token_measure(r, "epkl") == pytest.approx(
            token_measures(sets[0])["epkl"], abs=1e-12)
