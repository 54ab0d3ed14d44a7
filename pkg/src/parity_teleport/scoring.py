# src/parity_teleport/scoring.py
"""
Scoring of teleportation runs.

Fidelities are reals in [0, 1]:
- 1.0 = Bob holds exactly the state Alice prepared
- 0.5 = chance level for a qubit

Sampled outcome frequencies are checked against the exact 1/4 law with a
sigma bound from config.Defaults.
"""

from collections import Counter

import numpy as np

from parity_teleport.bell import OUTCOMES
from parity_teleport.config import Defaults
from parity_teleport.models import BellOutcome, FidelityStats, MonteCarloSummary, TrialRecord


def summarize(values: list[float]) -> FidelityStats:
    """
    Min / mean / max of a list of fidelities.

    Args:
        values: fidelities from trials or exhaustive branches

    Returns:
        FidelityStats; all zeros for an empty list
    """
    if not values:
        return FidelityStats(min=0.0, mean=0.0, max=0.0)
    arr = np.asarray(values, dtype=float)
    return FidelityStats(min=float(arr.min()), mean=float(arr.mean()), max=float(arr.max()))


def sampling_tolerance(n_trials: int, p: float = 0.25, sigmas: float = Defaults.SIGMAS) -> float:
    """
    Allowed |frequency - p| after n_trials Bernoulli draws.

    sigmas * sqrt(p(1-p)/N); for N = 40000 and 4 sigma this is ~0.00866.
    """
    if n_trials <= 0:
        return float("inf")
    return sigmas * float(np.sqrt(p * (1 - p) / n_trials))


def max_probability_deviation(probabilities: dict[BellOutcome, float], expected: float = 0.25) -> float:
    return max(abs(probabilities.get(o, 0.0) - expected) for o in OUTCOMES)


def summarize_trials(records: list[TrialRecord], seed: int, mode: str) -> MonteCarloSummary:
    """
    Histogram of sampled outcomes plus fidelity statistics.

    Args:
        records: trial records in trial_id order
        seed: master seed the records were drawn with
        mode: projector or apparatus

    Returns:
        MonteCarloSummary with counts in canonical outcome order
    """
    n = len(records)
    counter = Counter(r.outcome for r in records)
    counts = {o: counter.get(o, 0) for o in OUTCOMES}
    frequencies = {o: (c / n if n else 0.0) for o, c in counts.items()}
    deviation = max_probability_deviation(frequencies) if n else 0.0
    tolerance = sampling_tolerance(n)
    return MonteCarloSummary(
        trials=n,
        seed=seed,
        mode=mode,
        counts=counts,
        frequencies=frequencies,
        max_deviation=deviation,
        tolerance=tolerance,
        within_tolerance=deviation <= tolerance,
        parity_fidelity=summarize([r.parity_fidelity_after for r in records]),
        full_oam_fidelity=summarize([r.full_oam_fidelity for r in records]),
    )
