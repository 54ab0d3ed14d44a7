# tests/test_apparatus.py
import numpy as np
import pytest

from parity_teleport.apparatus import (
    ENTRY,
    ODD,
    BenchLayout,
    build_bell_analyzer,
    derive_detector_map,
    detector_distribution,
)
from parity_teleport.bell import collapse, outcome_probabilities
from parity_teleport.elements import oam_parity_sorter
from parity_teleport.errors import ConventionInconsistencyError, WiringError
from parity_teleport.hilbert import OamWindow, SinglePhotonState, TwoPhotonState
from parity_teleport.models import BellOutcome
from parity_teleport.protocol import haar_qubit
from parity_teleport.spdc import make_chi0, make_profile, prepare_polarization, random_profile


@pytest.fixture
def window():
    return OamWindow(2)


class TestDetectorMap:
    def test_symmetric_convention(self, window):
        """Test the detector assignment with the i-on-reflection splitter"""
        mapping = derive_detector_map(build_bell_analyzer(window, "symmetric"))
        assert mapping == {
            "D1": BellOutcome.PHI_MINUS,
            "D2": BellOutcome.PHI_PLUS,
            "D3": BellOutcome.PSI_MINUS,
            "D4": BellOutcome.PSI_PLUS,
        }

    def test_hadamard_convention(self, window):
        """Test the detector assignment with the real splitter"""
        mapping = derive_detector_map(build_bell_analyzer(window, "hadamard"))
        assert mapping == {
            "D1": BellOutcome.PHI_PLUS,
            "D2": BellOutcome.PHI_MINUS,
            "D3": BellOutcome.PSI_PLUS,
            "D4": BellOutcome.PSI_MINUS,
        }

    @pytest.mark.parametrize("K", [1, 3, 5])
    def test_map_does_not_depend_on_window(self, K):
        """Test the same map for every window size"""
        assert derive_detector_map(build_bell_analyzer(OamWindow(K))) == derive_detector_map(
            build_bell_analyzer(OamWindow(2))
        )

    def test_sorter_alone_is_inconsistent(self, window):
        """Test that a bench which splits Bell states across detectors is refused"""
        layout = BenchLayout(window, 2, (oam_parity_sorter(window, 0, 1),), (("D1", 0), ("D2", 1)))
        with pytest.raises(ConventionInconsistencyError):
            derive_detector_map(layout)


class TestDetectorDistribution:
    @pytest.mark.parametrize("convention", ["symmetric", "hadamard"])
    def test_matches_projective_measurement(self, convention):
        """Test detector probabilities and Bob's states against the Bell projectors in 50 random cases"""
        rng = np.random.default_rng(31)
        layouts = {K: build_bell_analyzer(OamWindow(K), convention) for K in range(1, 5)}
        mappings = {K: derive_detector_map(layout) for K, layout in layouts.items()}
        for case in range(50):
            K = case % 4 + 1
            profile = random_profile(K, rng)
            alpha, beta = haar_qubit(rng)
            chi = prepare_polarization(make_chi0(profile), alpha, beta)
            probabilities = outcome_probabilities(chi)
            readings = detector_distribution(chi, layouts[K])
            for name, reading in readings.items():
                outcome = mappings[K][name]
                assert reading.probability == pytest.approx(probabilities[outcome], abs=1e-12)
                np.testing.assert_allclose(reading.bob.matrix, collapse(chi, outcome).matrix, atol=1e-10)

    def test_silent_detector(self, window):
        """Test that a detector no light reaches reports zero and no state"""
        a = SinglePhotonState.basis(window, 0, "H")
        chi = TwoPhotonState.product(a, a)
        layout = build_bell_analyzer(window)
        mapping = derive_detector_map(layout)
        readings = detector_distribution(chi, layout)
        for name, reading in readings.items():
            if mapping[name] in (BellOutcome.PSI_PLUS, BellOutcome.PSI_MINUS):
                assert reading.probability == pytest.approx(0.0, abs=1e-12)
                assert reading.bob is None

    def test_unwatched_path(self, window):
        """Test that light leaving on a path with no detector is a wiring error"""
        full = build_bell_analyzer(window)
        layout = BenchLayout(window, full.n_paths, full.stages, full.detectors[:3])
        chi = prepare_polarization(make_chi0(make_profile("uniform", l=1, K=2)), 0.6, 0.8)
        with pytest.raises(WiringError, match="unwatched path"):
            detector_distribution(chi, layout)

    def test_wrong_entry_path(self, window):
        """Test that photon A may only enter on the entry arm"""
        layout = build_bell_analyzer(window)
        a = SinglePhotonState.basis(window, 0, path=ODD, n_paths=layout.n_paths)
        chi = TwoPhotonState.product(a, SinglePhotonState.basis(window, 1))
        with pytest.raises(WiringError, match="entry path"):
            detector_distribution(chi, layout)


class TestBenchLayout:
    def test_needs_detectors(self, window):
        """Test that an empty detector list is refused"""
        with pytest.raises(WiringError, match="no detectors"):
            BenchLayout(window, 1, (), ())

    def test_duplicate_names(self, window):
        """Test that detector names are unique"""
        with pytest.raises(WiringError, match="duplicate"):
            BenchLayout(window, 2, (), (("D1", 0), ("D1", 1)))

    def test_shared_path(self, window):
        """Test that two detectors cannot watch one path"""
        with pytest.raises(WiringError, match="share a path"):
            BenchLayout(window, 2, (), (("D1", 0), ("D2", 0)))

    def test_detector_out_of_range(self, window):
        """Test that detector paths must exist"""
        with pytest.raises(WiringError, match="outside"):
            BenchLayout(window, 2, (), (("D1", 0), ("D2", 5)))

    def test_detector_paths(self, window):
        """Test the analyzer's detector wiring"""
        assert build_bell_analyzer(window).detector_paths == {"D1": ENTRY, "D2": 3, "D3": 2, "D4": ODD}
