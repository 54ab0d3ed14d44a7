# tests/test_scoring.py
import math

import pytest
from parity_teleport.bell import OUTCOMES
from parity_teleport.models import BellOutcome, TrialRecord
from parity_teleport.scoring import (
    max_probability_deviation,
    sampling_tolerance,
    summarize,
    summarize_trials,
)


def make_record(trial_id, outcome, parity=1.0, full_oam=0.5):
    return TrialRecord(
        trial_id=trial_id,
        alpha=(1.0, 0.0),
        beta=(0.0, 0.0),
        outcome=outcome,
        classical_bits=outcome.classical_bits,
        parity_fidelity_before=0.0,
        parity_fidelity_after=parity,
        full_oam_fidelity=full_oam,
    )


class TestSummarize:
    """Test min/mean/max of fidelity lists"""

    def test_basic(self):
        """Three values give their min, mean and max"""
        stats = summarize([0.5, 1.0, 0.75])
        assert stats.min == 0.5
        assert stats.mean == pytest.approx(0.75)
        assert stats.max == 1.0

    def test_empty(self):
        """An empty list gives zeros"""
        stats = summarize([])
        assert (stats.min, stats.mean, stats.max) == (0.0, 0.0, 0.0)


class TestSamplingTolerance:
    """Test the sigma bound on sampled frequencies"""

    def test_40000_trials(self):
        """4 sigma at N=40000 is about 0.00866"""
        assert sampling_tolerance(40000) == pytest.approx(0.00866, abs=1e-5)

    def test_shrinks_with_trials(self):
        """More trials should tighten the bound"""
        assert sampling_tolerance(100) > sampling_tolerance(10000)

    def test_custom_sigmas(self):
        """The bound scales linearly with sigmas"""
        assert sampling_tolerance(400, sigmas=2.0) == pytest.approx(sampling_tolerance(400, sigmas=4.0) / 2)

    def test_no_trials(self):
        """Zero trials have no bound"""
        assert math.isinf(sampling_tolerance(0))


class TestMaxProbabilityDeviation:
    """Test distance from the uniform 1/4 law"""

    def test_uniform(self):
        """Exact quarters give zero deviation"""
        assert max_probability_deviation({o: 0.25 for o in OUTCOMES}) == 0.0

    def test_missing_outcome_counts_as_zero(self):
        """An absent outcome deviates by the full 1/4"""
        probabilities = {BellOutcome.PHI_PLUS: 0.5, BellOutcome.PHI_MINUS: 0.5}
        assert max_probability_deviation(probabilities) == pytest.approx(0.25)


class TestSummarizeTrials:
    """Test Monte Carlo summaries"""

    def test_counts_in_canonical_order(self):
        """Counts are listed for all four outcomes, zero included"""
        records = [make_record(i, BellOutcome.PSI_MINUS) for i in range(3)]
        records.append(make_record(3, BellOutcome.PHI_PLUS))
        summary = summarize_trials(records, seed=1, mode="projector")
        assert list(summary.counts) == list(OUTCOMES)
        assert summary.counts[BellOutcome.PSI_MINUS] == 3
        assert summary.counts[BellOutcome.PSI_PLUS] == 0
        assert summary.frequencies[BellOutcome.PHI_PLUS] == pytest.approx(0.25)
        assert summary.max_deviation == pytest.approx(0.5)

    def test_balanced_records_are_within_tolerance(self):
        """One of each outcome matches the 1/4 law exactly"""
        records = [make_record(i, o) for i, o in enumerate(OUTCOMES)]
        summary = summarize_trials(records, seed=0, mode="apparatus")
        assert summary.max_deviation == 0.0
        assert summary.within_tolerance
        assert summary.mode == "apparatus"

    def test_fidelity_statistics(self):
        """Parity and full-OAM statistics come from the records"""
        records = [make_record(0, BellOutcome.PHI_PLUS, 1.0, 0.5), make_record(1, BellOutcome.PHI_MINUS, 0.9, 0.7)]
        summary = summarize_trials(records, seed=0, mode="projector")
        assert summary.parity_fidelity.min == pytest.approx(0.9)
        assert summary.full_oam_fidelity.mean == pytest.approx(0.6)

    def test_no_records(self):
        """An empty run summarizes to zeros"""
        summary = summarize_trials([], seed=0, mode="projector")
        assert summary.trials == 0
        assert summary.max_deviation == 0.0
        assert summary.within_tolerance
