# tests/test_bell.py
import numpy as np
import pytest

from parity_teleport.bell import (
    OUTCOMES,
    bell_projectors,
    bell_state,
    collapse,
    expand_in_bell,
    outcome_probabilities,
    reconstruct,
)
from parity_teleport.errors import ImpossibleOutcomeError, InvalidArgumentError, ShapeMismatchError
from parity_teleport.hilbert import (
    OamWindow,
    SinglePhotonState,
    TwoPhotonState,
    fidelity,
    inner,
    pairing_isometry,
)
from parity_teleport.models import BellOutcome
from parity_teleport.protocol import haar_qubit
from parity_teleport.spdc import make_chi0, make_profile, parity_states, prepare_polarization, random_profile


@pytest.fixture
def window():
    return OamWindow(2)


class TestBellStates:
    def test_orthonormal(self, window):
        """Test that all eight Bell vectors of K=2 are orthonormal"""
        vectors = [bell_state(window, q, o) for o in OUTCOMES for q in window.even_modes]
        gram = np.array([[inner(a, b) for b in vectors] for a in vectors])
        np.testing.assert_allclose(gram, np.eye(len(vectors)), atol=1e-12)

    def test_phi_plus_amplitudes(self, window):
        """Test (|q,H> + |1-q,V>)/sqrt2"""
        state = bell_state(window, 2, BellOutcome.PHI_PLUS)
        assert state.amps[window.index(2), 0, 0] == pytest.approx(1 / np.sqrt(2))
        assert state.amps[window.index(-1), 1, 0] == pytest.approx(1 / np.sqrt(2))

    def test_psi_minus_amplitudes(self, window):
        """Test (|1-q,H> - |q,V>)/sqrt2"""
        state = bell_state(window, 0, BellOutcome.PSI_MINUS)
        assert state.amps[window.index(1), 0, 0] == pytest.approx(1 / np.sqrt(2))
        assert state.amps[window.index(0), 1, 0] == pytest.approx(-1 / np.sqrt(2))

    def test_pair_outside_window(self, window):
        """Test that q=4 has no partner inside K=2"""
        with pytest.raises(InvalidArgumentError):
            bell_state(window, 4, BellOutcome.PHI_PLUS)


class TestProjectors:
    @pytest.mark.parametrize("K", range(1, 9))
    def test_complete_and_idempotent(self, K):
        """Test P_o^2 = P_o, P_o P_o' = 0 and sum P_o = I"""
        projectors = bell_projectors(OamWindow(K))
        for o in OUTCOMES:
            p = projectors[o]
            np.testing.assert_allclose(p @ p, p, atol=1e-12)
            for other in OUTCOMES:
                if other != o:
                    np.testing.assert_allclose(p @ projectors[other], 0, atol=1e-12)
        np.testing.assert_allclose(projectors.total(), np.eye(OamWindow(K).size * 2), atol=1e-12)


class TestOutcomeProbabilities:
    def test_uniform_quarter_for_resource_state(self):
        """Test each outcome has probability 1/4 for 102 random profiles and inputs, K=1..6"""
        rng = np.random.default_rng(17)
        for case in range(102):
            profile = random_profile(case % 6 + 1, rng)
            alpha, beta = haar_qubit(rng)
            chi = prepare_polarization(make_chi0(profile), alpha, beta)
            probabilities = outcome_probabilities(chi)
            assert list(probabilities) == list(OUTCOMES)
            for p in probabilities.values():
                assert p == pytest.approx(0.25, abs=1e-12)

    def test_product_state_is_not_uniform(self, window):
        """Test |0,H>|0,H> splits between phi+ and phi- only"""
        a = SinglePhotonState.basis(window, 0, "H")
        chi = TwoPhotonState.product(a, a)
        probabilities = outcome_probabilities(chi)
        assert probabilities[BellOutcome.PHI_PLUS] == pytest.approx(0.5)
        assert probabilities[BellOutcome.PHI_MINUS] == pytest.approx(0.5)
        assert probabilities[BellOutcome.PSI_PLUS] == pytest.approx(0.0)
        assert probabilities[BellOutcome.PSI_MINUS] == pytest.approx(0.0)

    def test_multi_path_photon_a(self, window):
        """Test that the analysis needs photon A on a single path"""
        chi = TwoPhotonState.product(
            SinglePhotonState.basis(window, 0, n_paths=2), SinglePhotonState.basis(window, 0)
        )
        with pytest.raises(ShapeMismatchError):
            outcome_probabilities(chi)


class TestCollapse:
    def test_impossible_outcome(self, window):
        """Test that a zero-probability outcome is an error"""
        a = SinglePhotonState.basis(window, 0, "H")
        chi = TwoPhotonState.product(a, a)
        with pytest.raises(ImpossibleOutcomeError):
            collapse(chi, BellOutcome.PSI_PLUS)

    def test_collapse_is_normalized(self):
        """Test that Bob's parity qubit is pure while his full OAM state is mixed over pairs"""
        profile = make_profile("gaussian", l=1, K=3, width=1.5)
        chi = prepare_polarization(make_chi0(profile), 0.6, 0.8j)
        for o in OUTCOMES:
            rho = collapse(chi, o)
            rho.validate()
            pairing = pairing_isometry(rho)
            assert pairing.qubit.purity() == pytest.approx(1.0, abs=1e-10)
            assert np.count_nonzero(np.diag(pairing.pair_marginal).real > 1e-12) > 1
            assert rho.purity() < 1.0 - 1e-6

    def test_full_oam_fidelity_is_one_over_k(self):
        """Test phi+ with alpha=1 at uniform K=2: full-OAM fidelity 1/2, parity fidelity 1"""
        profile = make_profile("uniform", l=1, K=2)
        chi = prepare_polarization(make_chi0(profile), 1.0, 0.0)
        rho = collapse(chi, BellOutcome.PHI_PLUS)
        _, odd = parity_states(profile)
        assert fidelity(rho, odd) == pytest.approx(0.5, abs=1e-12)
        assert pairing_isometry(rho).qubit.fidelity(0.0, 1.0) == pytest.approx(1.0, abs=1e-12)

    def test_phi_plus_leaves_bob_odd(self):
        """Test that phi+ with alpha=1 leaves Bob in the odd parity state"""
        profile = make_profile("uniform", l=1, K=2)
        chi = prepare_polarization(make_chi0(profile), 1.0, 0.0)
        rho = collapse(chi, BellOutcome.PHI_PLUS)
        np.testing.assert_allclose(pairing_isometry(rho).qubit.rho, [[0, 0], [0, 1]], atol=1e-12)


class TestExpansion:
    def test_reconstruct_inverts_expand(self):
        """Test that the Bell branches sum back to the joint state"""
        profile = random_profile(3, np.random.default_rng(23))
        chi = prepare_polarization(make_chi0(profile), np.cos(0.3), np.sin(0.3) * 1j)
        back = reconstruct(chi.window, expand_in_bell(chi))
        np.testing.assert_allclose(back.amps, chi.amps, atol=1e-12)

    def test_branch_weights_match_probabilities(self):
        """Test that summed branch norms per outcome equal the outcome probabilities"""
        profile = make_profile("uniform", l=1, K=2)
        chi = prepare_polarization(make_chi0(profile), 0.6, 0.8)
        probabilities = outcome_probabilities(chi)
        for o in OUTCOMES:
            weight = sum(np.linalg.norm(b.bob) ** 2 for b in expand_in_bell(chi) if b.outcome == o)
            assert weight == pytest.approx(probabilities[o], abs=1e-12)
