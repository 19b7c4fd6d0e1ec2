import itertools
import math

import numpy as np
import pytest

from bellsel import analysis
from bellsel.quantum_core import AngleConfig, BellLabel, bell_state, joint_probabilities
from bellsel.toy_models import charlie_hoppers, charlie_retention, inverse_probabilities

from conftest import MILLION, conditional_freqs

BITS = list(itertools.product((0, 1), repeat=4))


def exact(label, angles, a, b):
    return joint_probabilities(bell_state(label), angles.alpha(a), angles.beta(b)).as_array()


class TestInverseProbabilities:
    @pytest.mark.parametrize("a,b,A,B", BITS)
    def test_normalized(self, a, b, A, B):
        assert abs(inverse_probabilities(a, b, A, B).sum() - 1) <= 1e-12

    @pytest.mark.parametrize("a,b,A,B", BITS)
    def test_likelihoods_sum_to_one_so_posterior_equals_likelihood(self, a, b, A, B):
        angles = AngleConfig()
        lik = np.array([exact(l, angles, a, b)[2 * A + B] for l in BellLabel])
        assert abs(lik.sum() - 1) <= 1e-12
        assert np.allclose(inverse_probabilities(a, b, A, B, angles), lik, atol=1e-12)

    def test_equal_angles_anticorrelated_excludes_phi_states(self):
        angles = AngleConfig(0.0, 1.0, 0.0, 0.1)
        for A, B in ((0, 1), (1, 0)):
            post = inverse_probabilities(0, 0, A, B, angles)
            assert post[2] == pytest.approx(0, abs=1e-15) and post[3] == pytest.approx(0, abs=1e-15)

    def test_phi_plus_excluded_at_any_equal_angle(self):
        # phi- correlates as cos 2(alpha+beta), so only phi+ is excluded for every alpha = beta
        angles = AngleConfig(0.5, 1.0, 0.5, 0.1)
        for A, B in ((0, 1), (1, 0)):
            assert inverse_probabilities(0, 0, A, B, angles)[2] == pytest.approx(0, abs=1e-15)

    def test_nonuniform_prior(self):
        post = inverse_probabilities(0, 0, 0, 1, prior=(0.7, 0.1, 0.1, 0.1))
        lik = np.array([exact(l, AngleConfig(), 0, 0)[1] for l in BellLabel]) * [0.7, 0.1, 0.1, 0.1]
        assert np.allclose(post, lik / lik.sum())

    def test_prior_with_unreachable_outcome_rejected(self):
        with pytest.raises(ValueError):
            inverse_probabilities(0, 0, 0, 0, AngleConfig(0, 0, 0, 0), prior=(1, 0, 0, 0))


class TestRetention:
    def test_retained_fraction(self, retention):
        assert abs(retention.retained_fraction - 0.25) <= 0.003
        assert retention.attempted == MILLION
        assert retention.retained_count == len(retention.retained)

    def test_run_ids_preserved(self, retention):
        r = retention.retained.run
        assert np.all(np.diff(r) > 0) and r.max() < MILLION

    def test_conditional_frequencies(self, retention, angles):
        for a in (0, 1):
            for b in (0, 1):
                assert np.all(np.abs(conditional_freqs(retention.retained, a, b) - exact(0, angles, a, b)) <= 0.01)

    def test_rejection_sampling_5sigma(self, retention, angles):
        ens = retention.retained
        for a in (0, 1):
            for b in (0, 1):
                n = int(((ens.a == a) & (ens.b == b)).sum())
                p = exact(0, angles, a, b)
                assert np.all(np.abs(conditional_freqs(ens, a, b) - p) <= 5 * np.sqrt(p * (1 - p) / n))

    def test_chsh(self, retention):
        s = analysis.estimate_chsh(analysis.estimate_correlations(retention.retained))
        assert abs(abs(s.S) - 2 * math.sqrt(2)) <= 0.05

    def test_perfect_match_rule(self):
        res = charlie_retention(20_000, seed=4, rule="perfect_match_only")
        assert np.all(res.retained.A == res.retained.B)
        s = analysis.estimate_chsh(analysis.estimate_correlations(res.retained))
        assert s.S == pytest.approx(2.0)  # E = 1 everywhere; one form flips a sign

    def test_bad_rule(self):
        with pytest.raises(ValueError):
            charlie_retention(10, 1, rule="greedy")

    def test_deterministic(self):
        a = charlie_retention(5000, 8).retained
        b = charlie_retention(5000, 8).retained
        assert a == b


class TestHoppers:
    def test_conservation(self, hoppers):
        assert sum(hoppers.sizes().values()) == hoppers.attempted == MILLION
        assert len(hoppers.pooled()) == MILLION
        assert np.array_equal(hoppers.pooled().run, np.arange(MILLION))

    def test_occupancy(self, hoppers):
        for size in hoppers.sizes().values():
            assert abs(size / MILLION - 0.25) <= 0.005

    @pytest.mark.parametrize("label", list(BellLabel))
    def test_hopper_frequencies(self, hoppers, angles, label):
        ens = hoppers.hoppers[label]
        for a in (0, 1):
            for b in (0, 1):
                assert np.all(np.abs(conditional_freqs(ens, a, b) - exact(label, angles, a, b)) <= 0.01)

    def test_pooled_uncorrelated(self, hoppers):
        rep = analysis.estimate_correlations(hoppers.pooled())
        assert all(abs(rep[p].E) <= 0.01 for p in analysis.PAIRS)

    def test_bayes_consistency(self, hoppers, angles):
        pooled = hoppers.pooled()
        code = 8 * pooled.a.astype(int) + 4 * pooled.b + 2 * pooled.A + pooled.B
        for a, b, A, B in BITS:
            m = code == 8 * a + 4 * b + 2 * A + B
            n = int(m.sum())
            freq = np.bincount(pooled.sel[m], minlength=4) / n
            p = inverse_probabilities(a, b, A, B, angles)
            assert np.all(np.abs(freq - p) <= 5 * np.sqrt(p * (1 - p) / n) + 1e-12)

    def test_msbc_instantiation(self, hoppers):
        pooled = hoppers.pooled()
        assert analysis.msbc_test(pooled).msbc_holds
        sup = analysis.estimate_chsh(analysis.estimate_correlations(pooled))
        assert abs(sup.S) <= 2 and not sup.violates_classical
        for est in analysis.chsh_by_group(pooled, "sel").values():
            assert est.violates_classical
