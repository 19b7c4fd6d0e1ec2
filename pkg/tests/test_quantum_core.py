import cmath
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bellsel.quantum_core import (
    AngleConfig,
    BellLabel,
    JointDist,
    StateVec,
    basis_state,
    bell_state,
    bsm_decompose,
    chsh_form,
    chsh_value,
    correlator,
    joint_probabilities,
    mixed_joint_probabilities,
    swap_input_state,
)

R = 1 / math.sqrt(2)
angle = st.floats(min_value=-2 * math.pi, max_value=2 * math.pi, allow_nan=False)
labels = st.sampled_from(list(BellLabel))


def projector_oracle(amps, alpha, beta):
    """Born rule via explicit kron'd basis vectors (independent of the engine's matrix form)."""
    def vec(theta, outcome):
        c, s = math.cos(theta), math.sin(theta)
        return np.array([c, s]) if outcome == 0 else np.array([-s, c])

    amps = np.asarray(amps, dtype=complex)
    return np.array([
        abs(np.dot(np.kron(vec(alpha, A), vec(beta, B)), amps)) ** 2
        for A, B in itertools.product((0, 1), repeat=2)
    ])


CLOSED_FORM_E = {
    BellLabel.C0: lambda a, b: -math.cos(2 * (b - a)),
    BellLabel.C1: lambda a, b: -math.cos(2 * (a + b)),
    BellLabel.C2: lambda a, b: math.cos(2 * (a - b)),
    BellLabel.C3: lambda a, b: math.cos(2 * (a + b)),
}


class TestBellStates:
    def test_singlet_amplitudes(self):
        assert np.allclose(bell_state(BellLabel.C0).amplitudes, [0, R, -R, 0], atol=0)

    def test_phi_plus_amplitudes(self):
        assert np.allclose(bell_state("C2").amplitudes, [R, 0, 0, R], atol=0)

    @pytest.mark.parametrize("label", list(BellLabel))
    def test_normalized(self, label):
        assert abs(np.linalg.norm(bell_state(label).amplitudes) - 1) <= 1e-12

    def test_bell_states_orthonormal(self):
        m = np.array([bell_state(lbl).amplitudes for lbl in BellLabel])
        assert np.allclose(m @ m.conj().T, np.eye(4), atol=1e-12)

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            StateVec([1, 1, 0, 0])

    def test_rejects_wrong_dimension(self):
        with pytest.raises(ValueError):
            StateVec([1, 0, 0])

    def test_state_is_immutable(self):
        s = bell_state(0)
        with pytest.raises(ValueError):
            s.amplitudes[0] = 1


class TestJointProbabilities:
    def test_singlet_equal_angles(self):
        d = joint_probabilities(bell_state(0), 0.3, 0.3)
        assert d.p00 == pytest.approx(0, abs=1e-15) and d.p11 == pytest.approx(0, abs=1e-15)
        assert d.p01 == pytest.approx(0.5) and d.p10 == pytest.approx(0.5)

    def test_singlet_quarter_pi(self):
        d = joint_probabilities(bell_state(0), 0.0, math.pi / 4)
        expected = projector_oracle([0, R, -R, 0], 0.0, math.pi / 4)
        assert np.allclose(d.as_array(), expected, atol=1e-12)
        assert np.allclose(d.as_array(), [0.25] * 4, atol=1e-12)

    def test_phi_plus_computational(self):
        d = joint_probabilities(bell_state(2), 0.0, 0.0)
        assert np.allclose(d.as_array(), [0.5, 0, 0, 0.5], atol=1e-15)

    def test_rejects_four_qubit_state(self):
        with pytest.raises(ValueError):
            joint_probabilities(swap_input_state(), 0, 0)

    @settings(max_examples=200, deadline=None)
    @given(labels, angle, angle)
    def test_matches_projector_oracle_and_normalized(self, label, alpha, beta):
        d = joint_probabilities(bell_state(label), alpha, beta)
        assert abs(sum(d) - 1) <= 1e-12
        assert all(0 <= p <= 1 for p in d)
        assert np.allclose(d.as_array(), projector_oracle(bell_state(label).amplitudes, alpha, beta), atol=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(labels, angle, angle, st.floats(min_value=0, max_value=2 * math.pi))
    def test_global_phase_invariance(self, label, alpha, beta, phi):
        s = bell_state(label)
        rotated = StateVec(cmath.exp(1j * phi) * s.amplitudes)
        assert np.allclose(
            joint_probabilities(rotated, alpha, beta).as_array(),
            joint_probabilities(s, alpha, beta).as_array(), rtol=0, atol=1e-15,
        )

    @settings(max_examples=100, deadline=None)
    @given(labels, angle, angle, angle)
    def test_no_signalling_marginals(self, label, alpha, beta, beta2):
        d1 = joint_probabilities(bell_state(label), alpha, beta)
        d2 = joint_probabilities(bell_state(label), alpha, beta2)
        assert abs(d1.marginal_a(0) - d2.marginal_a(0)) <= 1e-10
        d3 = joint_probabilities(bell_state(label), beta2, beta)
        assert abs(d1.marginal_b(0) - d3.marginal_b(0)) <= 1e-10


def test_closed_form_correlators_100_random_pairs():
    rng = np.random.default_rng(20240501)
    for alpha, beta in rng.uniform(-math.pi, math.pi, size=(100, 2)):
        for label, formula in CLOSED_FORM_E.items():
            e = correlator(joint_probabilities(bell_state(label), alpha, beta))
            assert abs(e - formula(alpha, beta)) <= 1e-10


class TestCorrelator:
    def test_uniform(self):
        assert correlator(JointDist(0.25, 0.25, 0.25, 0.25)) == 0

    def test_singlet_equal_angles(self):
        assert correlator(joint_probabilities(bell_state(0), 1.1, 1.1)) == pytest.approx(-1, abs=1e-15)

    def test_singlet_pi_over_8(self):
        d = joint_probabilities(bell_state(0), 0.0, math.pi / 8)
        brute = projector_oracle(bell_state(0).amplitudes, 0.0, math.pi / 8)
        assert correlator(d) == pytest.approx(brute[0] + brute[3] - brute[1] - brute[2], abs=1e-12)
        assert correlator(d) == pytest.approx(-math.sqrt(2) / 2, abs=1e-12)


class TestChsh:
    def test_tsirelson_at_default_angles(self):
        angles = AngleConfig(0, math.pi / 4, math.pi / 8, 3 * math.pi / 8)
        # brute force: enumerate E(a,b) from the projector oracle and take the best CHSH form
        es = []
        for a, b in itertools.product((0, 1), repeat=2):
            p = projector_oracle(bell_state(0).amplitudes, angles.alpha(a), angles.beta(b))
            es.append(p[0] + p[3] - p[1] - p[2])
        brute = max((chsh_form(es, k) for k in range(4)), key=abs)
        s = chsh_value(bell_state(0), angles)
        assert abs(s) == pytest.approx(2 * math.sqrt(2), abs=1e-12)
        assert s == pytest.approx(brute, abs=1e-12)

    def test_all_equal_angles(self):
        assert chsh_value(bell_state(0), AngleConfig(0.4, 0.4, 0.4, 0.4)) == pytest.approx(-2, abs=1e-12)

    @pytest.mark.parametrize("label", list(BellLabel))
    def test_every_bell_state_reaches_tsirelson(self, label):
        assert abs(chsh_value(bell_state(label))) == pytest.approx(2 * math.sqrt(2), abs=1e-10)

    def test_product_state_never_exceeds_two_on_grid(self):
        grid = np.linspace(0, math.pi, 9)
        prod = basis_state("00")
        worst = max(
            abs(chsh_value(prod, AngleConfig(a0, a1, b0, b1)))
            for a0, a1, b0, b1 in itertools.product(grid, repeat=4)
        )
        assert worst <= 2 + 1e-12

    def test_explicit_textbook_form(self):
        # minus on (a1, b1) with b1 = -pi/8 recovers the textbook arrangement
        angles = AngleConfig(0, math.pi / 4, math.pi / 8, -math.pi / 8)
        assert chsh_value(bell_state(2), angles, form=3) == pytest.approx(2 * math.sqrt(2), abs=1e-12)

    def test_rejects_unknown_form(self):
        with pytest.raises(ValueError):
            chsh_form([0, 0, 0, 0], 4)


class TestMixtures:
    def test_uniform_is_flat(self):
        rng = np.random.default_rng(5)
        for alpha, beta in rng.uniform(-3, 3, size=(10, 2)):
            closed = sum(joint_probabilities(bell_state(l), alpha, beta).as_array() for l in BellLabel) / 4
            assert np.allclose(closed, 0.25, atol=1e-10)
            assert np.allclose(mixed_joint_probabilities([0.25] * 4, alpha, beta).as_array(), 0.25, atol=1e-10)

    @settings(max_examples=100, deadline=None)
    @given(angle, angle)
    def test_uniform_flat_property(self, alpha, beta):
        assert np.allclose(mixed_joint_probabilities([0.25] * 4, alpha, beta).as_array(), 0.25, atol=1e-10)

    def test_degenerate_weights(self):
        assert np.allclose(
            mixed_joint_probabilities([1, 0, 0, 0], 0.2, 0.9).as_array(),
            joint_probabilities(bell_state(0), 0.2, 0.9).as_array(), atol=1e-15,
        )

    def test_psi_mixture_computational(self):
        assert np.allclose(mixed_joint_probabilities([0.5, 0.5, 0, 0], 0, 0).as_array(), [0, 0.5, 0.5, 0], atol=1e-15)

    @pytest.mark.parametrize("weights", [[0.5, 0.5, 0.5, -0.5], [0.2, 0.2, 0.2, 0.2], [1, 0, 0], [math.nan, 1, 0, 0]])
    def test_invalid_weights(self, weights):
        with pytest.raises(ValueError):
            mixed_joint_probabilities(weights, 0, 0)


class TestBsm:
    def test_two_singlets_equal_outcomes_and_swap(self):
        branches = bsm_decompose(swap_input_state())
        assert [b.label for b in branches] == list(BellLabel)
        for br in branches:
            assert br.probability == pytest.approx(0.25, abs=1e-12)
            assert br.state.equals_up_to_phase(bell_state(br.label), tol=1e-10)
            assert abs(np.linalg.norm(br.state.amplitudes) - 1) <= 1e-12

    def test_swap_by_explicit_projection(self):
        # independent route: build the projector |Ci><Ci| on qubits 2,3 as a 16x16 matrix
        psi = swap_input_state().amplitudes
        for br in bsm_decompose(swap_input_state()):
            c = bell_state(br.label).amplitudes
            proj = np.kron(np.kron(np.eye(2), np.outer(c, c.conj())), np.eye(2))
            post = proj @ psi
            assert np.vdot(post, post).real == pytest.approx(br.probability, abs=1e-12)
            # post-measurement state is cond(1,4) x Ci(2,3), interleaved back to qubit order
            cond = br.state.amplitudes.reshape(2, 2)
            rebuilt = np.einsum("il,jk->ijkl", cond, c.reshape(2, 2)).reshape(16) * math.sqrt(br.probability)
            assert abs(abs(np.vdot(rebuilt, post)) - br.probability) <= 1e-12

    def test_all_zero_input(self):
        branches = {b.label: b for b in bsm_decompose(basis_state("0000"))}
        assert branches[BellLabel.C2].probability == pytest.approx(0.5)
        assert branches[BellLabel.C3].probability == pytest.approx(0.5)
        for lbl in (BellLabel.C0, BellLabel.C1):
            assert branches[lbl].probability == 0.0 and branches[lbl].state is None
        for lbl in (BellLabel.C2, BellLabel.C3):
            assert branches[lbl].state.equals_up_to_phase(basis_state("00"))

    def test_rejects_two_qubit_state(self):
        with pytest.raises(ValueError):
            bsm_decompose(bell_state(0))


def test_angle_config_validation():
    with pytest.raises(ValueError):
        AngleConfig(0, math.inf, 0, 0)
    assert AngleConfig.from_string("0,0.5,1,1.5").as_tuple() == (0, 0.5, 1, 1.5)
    with pytest.raises(ValueError):
        AngleConfig.from_string("0,1")


@pytest.mark.parametrize("text, expected", [
    ("0,pi/4,pi/8,3pi/8", (0.0, math.pi / 4, math.pi / 8, 3 * math.pi / 8)),
    ("-pi, 0.5*pi, 2 pi/3, 1e-1", (-math.pi, math.pi / 2, 2 * math.pi / 3, 0.1)),
])
def test_angle_strings(text, expected):
    assert AngleConfig.from_string(text).as_tuple() == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("text", ["pi/0,0,0,0", "x,0,0,0", "0,0,0", "nan,0,0,0"])
def test_bad_angle_strings(text):
    with pytest.raises(ValueError):
        AngleConfig.from_string(text)
