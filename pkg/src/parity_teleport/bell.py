"""Hybrid polarization/OAM-parity Bell basis on photon A and projective measurement."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .config import Tolerances
from .errors import ImpossibleOutcomeError, InvalidArgumentError, ShapeMismatchError
from .hilbert import DensityMatrix, OamWindow, SinglePhotonState, TwoPhotonState
from .models import BellOutcome

logger = logging.getLogger(__name__)

# canonical order for sampling and reports
OUTCOMES: tuple[BellOutcome, ...] = (
    BellOutcome.PHI_PLUS,
    BellOutcome.PHI_MINUS,
    BellOutcome.PSI_PLUS,
    BellOutcome.PSI_MINUS,
)


def bell_state(window: OamWindow, q: int, outcome: BellOutcome, n_paths: int = 1) -> SinglePhotonState:
    """
    Hybrid Bell vector for the pair (q, 1-q), on path 0.

    Phi: (|q,H> +- |1-q,V>)/sqrt2.  Psi: (|1-q,H> +- |q,V>)/sqrt2.
    """
    if q not in window or (1 - q) not in window:
        raise InvalidArgumentError(f"charge pair ({q}, {1 - q}) is not inside the window")
    amps = np.zeros((window.size, 2, n_paths), dtype=complex)
    h, v = (q, 1 - q) if outcome.is_phi else (1 - q, q)
    amps[window.index(h), 0, 0] = 1.0
    amps[window.index(v), 1, 0] = outcome.sign
    return SinglePhotonState(window, amps / np.sqrt(2))


@dataclass(frozen=True, eq=False)
class BellProjectors:
    """The four projectors on photon A, each summed over the even members of the window."""

    window: OamWindow
    projectors: dict[BellOutcome, np.ndarray]

    def __getitem__(self, outcome: BellOutcome) -> np.ndarray:
        return self.projectors[outcome]

    def total(self) -> np.ndarray:
        return sum(self.projectors.values())


@lru_cache(maxsize=32)
def _projector_matrices(K: int) -> dict[BellOutcome, np.ndarray]:
    window = OamWindow(K)
    out = {}
    for outcome in OUTCOMES:
        p = np.zeros((window.size * 2, window.size * 2), dtype=complex)
        for q in window.even_modes:
            v = bell_state(window, q, outcome).vector
            p += np.outer(v, v.conj())
        p.setflags(write=False)
        out[outcome] = p
    return out


def bell_projectors(window: OamWindow) -> BellProjectors:
    return BellProjectors(window, _projector_matrices(window.K))


@dataclass(frozen=True, eq=False)
class BellBranch:
    """One term |Bell(outcome, q)>_A (x) |bob>_B of the joint state; `bob` is unnormalized."""

    outcome: BellOutcome
    q: int
    bob: np.ndarray


def _joint_matrix(chi: TwoPhotonState) -> np.ndarray:
    if chi.n_paths_a != 1:
        raise ShapeMismatchError(f"Bell analysis expects photon A on one path, got {chi.n_paths_a}")
    return chi.matrix()


def expand_in_bell(chi: TwoPhotonState) -> list[BellBranch]:
    """Rewrite the joint state in photon A's Bell basis, one branch per (outcome, even q)."""
    m = _joint_matrix(chi)
    branches = []
    for outcome in OUTCOMES:
        for q in chi.window.even_modes:
            b = bell_state(chi.window, q, outcome).vector
            branches.append(BellBranch(outcome, q, b.conj() @ m))
    return branches


def reconstruct(window: OamWindow, branches: list[BellBranch], n_paths_b: int = 1) -> TwoPhotonState:
    """Inverse of expand_in_bell."""
    d_a = window.size * 2
    m = np.zeros((d_a, window.size * 2 * n_paths_b), dtype=complex)
    for branch in branches:
        m += np.outer(bell_state(window, branch.q, branch.outcome).vector, branch.bob)
    return TwoPhotonState.from_matrix(window, m, 1, n_paths_b)


def outcome_probabilities(chi: TwoPhotonState) -> dict[BellOutcome, float]:
    """||(P_o (x) I) chi||^2 for each outcome, in canonical order."""
    m = _joint_matrix(chi)
    projectors = bell_projectors(chi.window)
    return {o: float(np.linalg.norm(projectors[o] @ m) ** 2) for o in OUTCOMES}


def collapse(chi: TwoPhotonState, outcome: BellOutcome, atol: float = Tolerances.ATOL) -> DensityMatrix:
    """Bob's normalized reduced state after photon A is found in `outcome`."""
    m = _joint_matrix(chi)
    projected = bell_projectors(chi.window)[outcome] @ m
    p = float(np.linalg.norm(projected) ** 2)
    if p <= atol:
        raise ImpossibleOutcomeError(f"{outcome.value} has probability {p:.3g}")
    projected = projected / np.sqrt(p)
    rho = projected.T @ projected.conj()
    logger.debug(f"collapsed on {outcome.value}: p={p:.6f}")
    return DensityMatrix(rho, chi.dims_b, chi.window)
