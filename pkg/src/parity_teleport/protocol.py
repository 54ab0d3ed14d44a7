# src/parity_teleport/protocol.py
"""
End-to-end teleportation of a polarization qubit onto Bob's OAM parity.

Alice prepares alpha|H> + beta|V> on photon A of the down-converted pair,
measures A in the hybrid Bell basis (abstract projectors or the optical
bench), sends two classical bits, and Bob applies the correction the bits
select. Fidelity is scored on Bob's parity qubit, with the full-OAM
fidelity recorded alongside.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal, NamedTuple

import numpy as np

from .apparatus import BenchLayout, build_bell_analyzer, derive_detector_map, detector_distribution
from .bell import OUTCOMES, collapse, outcome_probabilities
from .config import Defaults, Tolerances
from .elements import (
    ElementOp,
    compose,
    dove_prism,
    dp_sph,
    hwp,
    hwp_matrix,
    identity,
    oam_parity_sorter,
    parity_phase,
    pbs,
    sph,
)
from .errors import (
    ImpossibleOutcomeError,
    InvalidArgumentError,
    PreconditionError,
    ProtocolIntegrityError,
    ShapeMismatchError,
)
from .hilbert import (
    DensityMatrix,
    OamWindow,
    SinglePhotonState,
    TwoPhotonState,
    fidelity,
    pairing_isometry,
    reduce_to,
)
from .models import (
    BellOutcome,
    CorrectionTable,
    ExhaustiveReport,
    NegativeControlStats,
    OutcomeReport,
    SwapOutcomeReport,
    TrialRecord,
    to_pair,
)
from .spdc import Profile, make_chi0, make_profile, parity_states, prepare_polarization

logger = logging.getLogger(__name__)

Mode = Literal["projector", "apparatus"]

# Bob's options, tried in this order
CANDIDATES: tuple[tuple[str, ...], ...] = (
    (),
    ("dp_sph",),
    ("parity_phase(pi)",),
    ("dp_sph", "parity_phase(pi)"),
)
WAVEPLATE_CANDIDATES: tuple[tuple[str, ...], ...] = (
    (),
    ("hwp(pi/4)",),
    ("hwp(0)",),
    ("hwp(pi/4)", "hwp(0)"),
)
_WAVEPLATE_ANGLES = {"hwp(pi/4)": np.pi / 4, "hwp(0)": 0.0}

# generic input: no relation between |alpha| and |beta|, nontrivial phase
GENERIC_ALPHA = complex(np.cos(0.4))
GENERIC_BETA = complex(np.sin(0.4) * np.exp(0.9j))

UNCORRECTED_LABELS = {
    (): "alpha|E> + beta|O>",
    ("dp_sph",): "alpha|O> + beta|E>",
    ("parity_phase(pi)",): "alpha|E> - beta|O>",
    ("dp_sph", "parity_phase(pi)"): "alpha|O> - beta|E>",
}

# Pauli eigenstates: a 2-design, so quadratic averages over them equal Haar averages
PAULI_STATES: tuple[tuple[complex, complex], ...] = (
    (1.0, 0.0),
    (0.0, 1.0),
    (1 / np.sqrt(2), 1 / np.sqrt(2)),
    (1 / np.sqrt(2), -1 / np.sqrt(2)),
    (1 / np.sqrt(2), 1j / np.sqrt(2)),
    (1 / np.sqrt(2), -1j / np.sqrt(2)),
)


# --- Corrections ---


def correction_ops(names: tuple[str, ...], window: OamWindow, n_paths: int = 1) -> ElementOp:
    ops = []
    for name in names:
        if name == "dp_sph":
            ops.append(dp_sph(window, n_paths))
        elif name == "parity_phase(pi)":
            ops.append(parity_phase(window, np.pi, n_paths))
        else:
            raise InvalidArgumentError(f"unknown correction {name!r}")
    return compose(ops) if ops else identity(window, n_paths)


def waveplate_matrix(names: tuple[str, ...]) -> np.ndarray:
    """Jones matrix of the listed wave plates, first one acting first."""
    j = np.eye(2, dtype=complex)
    for name in names:
        if name not in _WAVEPLATE_ANGLES:
            raise InvalidArgumentError(f"unknown wave-plate correction {name!r}")
        j = hwp_matrix(_WAVEPLATE_ANGLES[name]) @ j
    return j


def induced_qubit_matrix(op: ElementOp, profile: Profile) -> np.ndarray:
    """2x2 matrix <i|op|j> of an element on span{|E>, |O>}."""
    e, o = parity_states(profile)
    basis = [e.vector, o.vector]
    images = [op.matrix @ v for v in basis]
    return np.array([[np.vdot(bra, img) for img in images] for bra in basis])


def target_state(profile: Profile, alpha: complex, beta: complex) -> SinglePhotonState:
    e, o = parity_states(profile)
    return SinglePhotonState(profile.window, alpha * e.amps + beta * o.amps)


def uncorrected_state(names: tuple[str, ...], profile: Profile, alpha: complex, beta: complex) -> SinglePhotonState:
    """The full-OAM state Bob holds before applying `names`, as the outcome's pure-state reading."""
    coefficients = {
        (): (alpha, beta),
        ("dp_sph",): (beta, alpha),
        ("parity_phase(pi)",): (alpha, -beta),
        ("dp_sph", "parity_phase(pi)"): (-beta, alpha),
    }
    if names not in coefficients:
        raise InvalidArgumentError(f"no uncorrected state for correction {names}")
    a, b = coefficients[names]
    return target_state(profile, a, b)


def parity_fidelity(rho: DensityMatrix, alpha: complex, beta: complex) -> float:
    return pairing_isometry(rho).qubit.fidelity(alpha, beta)


def _unique_candidate(scores: dict[tuple[str, ...], float], outcome: BellOutcome, atol: float) -> tuple[str, ...]:
    hits = [names for names, f in scores.items() if f >= 1.0 - atol]
    if len(hits) != 1:
        detail = ", ".join(f"{';'.join(n) or 'identity'}={f:.12f}" for n, f in scores.items())
        raise ProtocolIntegrityError(f"{outcome.value}: {len(hits)} corrections reach fidelity 1 ({detail})")
    return hits[0]


def derive_correction_table(profile: Profile, atol: float = Tolerances.FIDELITY) -> CorrectionTable:
    """
    Pick, for each outcome, the one candidate correction that restores
    alpha|E> + beta|O> on the parity qubit.

    Args:
        profile: symmetric l=1 profile
        atol: how far below 1 a restoring fidelity may fall

    Returns:
        CorrectionTable over the four outcomes

    Raises:
        ProtocolIntegrityError: when no candidate, or more than one, works
    """
    parity_states(profile)
    chi = prepare_polarization(make_chi0(profile), GENERIC_ALPHA, GENERIC_BETA)
    window = profile.window
    entries = {}
    for outcome in OUTCOMES:
        rho = collapse(chi, outcome)
        scores = {
            names: parity_fidelity(correction_ops(names, window).apply_density(rho), GENERIC_ALPHA, GENERIC_BETA)
            for names in CANDIDATES
        }
        entries[outcome] = _unique_candidate(scores, outcome, atol)
    table = CorrectionTable(entries=entries)
    logger.info(
        "correction table: " + ", ".join(f"{o.value}->{';'.join(n) or 'identity'}" for o, n in entries.items())
    )
    return table


# --- Trials ---


def trial_rng(seed: int, trial_id: int) -> np.random.Generator:
    """Independent stream per trial, so results do not depend on execution order."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0, trial_id)))


def input_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1,)))


def haar_qubit(rng: np.random.Generator) -> tuple[complex, complex]:
    z = rng.normal(size=2) + 1j * rng.normal(size=2)
    z /= np.linalg.norm(z)
    return complex(z[0]), complex(z[1])


def sample_outcome(probabilities: dict[BellOutcome, float], rng: np.random.Generator) -> BellOutcome:
    """Inverse-CDF draw over OUTCOMES in canonical order."""
    p = np.array([probabilities[o] for o in OUTCOMES])
    cdf = np.cumsum(p)
    u = rng.random() * cdf[-1]
    i = int(np.searchsorted(cdf, u, side="right"))
    if i >= len(OUTCOMES):
        i = int(np.flatnonzero(p > 0)[-1])
    return OUTCOMES[i]


@dataclass(frozen=True, eq=False)
class OutcomeBranch:
    outcome: BellOutcome
    probability: float
    bob: DensityMatrix
    correction: tuple[str, ...]
    parity_purity: float
    parity_fidelity_before: float
    parity_fidelity_after: float
    full_oam_fidelity_before: float
    full_oam_fidelity_after: float


class TeleportSession:
    """
    Everything about one input (alpha, beta) that does not depend on the
    sampled outcome: the four branches are evaluated once, trials only draw.
    """

    def __init__(
        self,
        profile: Profile,
        alpha: complex,
        beta: complex,
        mode: Mode = "projector",
        table: CorrectionTable | None = None,
        layout: BenchLayout | None = None,
        atol: float = Tolerances.FIDELITY,
    ):
        self.profile = profile
        self.alpha, self.beta = complex(alpha), complex(beta)
        self.mode = mode
        self.table = table or derive_correction_table(profile, atol)
        self.atol = atol
        if mode not in ("projector", "apparatus"):
            raise InvalidArgumentError(f"unknown mode {mode!r}")
        chi = prepare_polarization(make_chi0(profile), self.alpha, self.beta)
        self.probabilities = outcome_probabilities(chi)
        states = {o: collapse(chi, o) for o, p in self.probabilities.items() if p > Tolerances.ATOL}
        if mode == "apparatus":
            self.probabilities = self._read_detectors(chi, states, layout or build_bell_analyzer(profile.window))
        self.branches = {o: self._evaluate(o, self.probabilities[o], rho) for o, rho in states.items()}

    def _read_detectors(
        self, chi: TwoPhotonState, states: dict[BellOutcome, DensityMatrix], layout: BenchLayout
    ) -> dict[BellOutcome, float]:
        """
        Outcome probabilities as the bench's detectors report them.

        Each detector's conditional state for Bob must match the projector
        collapse of its mapped outcome; branches are then scored on the
        collapsed states so both modes report the same numbers.
        """
        readings = detector_distribution(chi, layout)
        probabilities = {o: 0.0 for o in OUTCOMES}
        for name, outcome in derive_detector_map(layout).items():
            reading = readings[name]
            probabilities[outcome] = reading.probability
            expected = states.get(outcome)
            if (reading.bob is None) != (expected is None):
                raise ProtocolIntegrityError(f"detector {name} disagrees with {outcome.value} on whether it can fire")
            if expected is not None and not np.allclose(
                reading.bob.matrix, expected.matrix, atol=self.atol, rtol=0.0
            ):
                raise ProtocolIntegrityError(
                    f"detector {name} leaves Bob in a state other than the {outcome.value} collapse"
                )
        return probabilities

    def _evaluate(self, outcome: BellOutcome, p: float, rho: DensityMatrix) -> OutcomeBranch:
        names = self.table.names(outcome)
        corrected = correction_ops(names, self.profile.window).apply_density(rho)
        before = pairing_isometry(rho).qubit
        after = parity_fidelity(corrected, self.alpha, self.beta)
        if after < 1.0 - self.atol:
            raise ProtocolIntegrityError(
                f"{outcome.value}: corrected parity fidelity {after:.12f} for alpha={self.alpha}, beta={self.beta}"
            )
        return OutcomeBranch(
            outcome=outcome,
            probability=p,
            bob=rho,
            correction=names,
            parity_purity=before.purity(),
            parity_fidelity_before=before.fidelity(self.alpha, self.beta),
            parity_fidelity_after=after,
            full_oam_fidelity_before=fidelity(rho, uncorrected_state(names, self.profile, self.alpha, self.beta)),
            full_oam_fidelity_after=fidelity(corrected, target_state(self.profile, self.alpha, self.beta)),
        )

    def record(self, trial_id: int, rng: np.random.Generator) -> TrialRecord:
        outcome = sample_outcome(self.probabilities, rng)
        if outcome not in self.branches:
            raise ImpossibleOutcomeError(f"sampled {outcome.value} with probability {self.probabilities[outcome]}")
        bit1, bit0 = outcome.bits
        # Bob sees only the two bits
        received = BellOutcome.from_bits(bit1, bit0)
        branch = self.branches[received]
        logger.debug(f"trial {trial_id}: {outcome.value} bits={outcome.classical_bits}")
        return TrialRecord(
            trial_id=trial_id,
            alpha=to_pair(self.alpha),
            beta=to_pair(self.beta),
            outcome=outcome,
            classical_bits=outcome.classical_bits,
            parity_fidelity_before=branch.parity_fidelity_before,
            parity_fidelity_after=branch.parity_fidelity_after,
            full_oam_fidelity=branch.full_oam_fidelity_after,
        )

    def report(self) -> ExhaustiveReport:
        pairings = {o: pairing_isometry(b.bob) for o, b in self.branches.items()}
        outcomes = [
            OutcomeReport(
                outcome=b.outcome,
                classical_bits=b.outcome.classical_bits,
                probability=b.probability,
                uncorrected_state=UNCORRECTED_LABELS[b.correction],
                correction=list(b.correction),
                parity_purity=b.parity_purity,
                parity_fidelity_before=b.parity_fidelity_before,
                parity_fidelity_after=b.parity_fidelity_after,
                full_oam_fidelity_before=b.full_oam_fidelity_before,
                full_oam_fidelity_after=b.full_oam_fidelity_after,
                parity_state=[[to_pair(z) for z in row] for row in pairings[b.outcome].qubit.rho],
                pair_weights=[float(w) for w in np.diag(pairings[b.outcome].pair_marginal).real],
            )
            for b in self.branches.values()
        ]
        return ExhaustiveReport(alpha=to_pair(self.alpha), beta=to_pair(self.beta), outcomes=outcomes)


def run_trial(
    profile: Profile,
    alpha: complex,
    beta: complex,
    rng: np.random.Generator,
    mode: Mode = "projector",
    trial_id: int = 0,
    table: CorrectionTable | None = None,
    layout: BenchLayout | None = None,
) -> TrialRecord:
    return TeleportSession(profile, alpha, beta, mode, table, layout).record(trial_id, rng)


def run_trials(
    profile: Profile,
    inputs: list[tuple[complex, complex]],
    n_trials: int,
    seed: int,
    mode: Mode = "projector",
    table: CorrectionTable | None = None,
    layout: BenchLayout | None = None,
) -> list[TrialRecord]:
    """Trial i teleports inputs[i % len(inputs)] with its own stream trial_rng(seed, i)."""
    if not inputs:
        raise InvalidArgumentError("run_trials needs at least one input")
    table = table or derive_correction_table(profile)
    if mode == "apparatus":
        layout = layout or build_bell_analyzer(profile.window)
    sessions: dict[int, TeleportSession] = {}
    records = []
    for trial_id in range(n_trials):
        k = trial_id % len(inputs)
        if k not in sessions:
            alpha, beta = inputs[k]
            sessions[k] = TeleportSession(profile, alpha, beta, mode, table, layout)
        records.append(sessions[k].record(trial_id, trial_rng(seed, trial_id)))
    logger.info(f"ran {n_trials} {mode} trials over {len(inputs)} input(s)")
    return records


def teleport_exhaustive(
    profile: Profile,
    alpha: complex,
    beta: complex,
    table: CorrectionTable | None = None,
    mode: Mode = "projector",
) -> ExhaustiveReport:
    return TeleportSession(profile, alpha, beta, mode, table).report()


# --- Parity to polarization swap ---


class SwapResult(NamedTuple):
    polarization: DensityMatrix
    residual_oam: DensityMatrix


def swap_circuit(window: OamWindow) -> ElementOp:
    """
    Sorter, Dove prism and sph(+1) on the odd arm, HWP(pi/4) there, then a
    PBS recombining the odd arm's V with the even arm's H on path 0.
    """
    n = 2
    return compose(
        [
            oam_parity_sorter(window, 0, 1, path_in=0, n_paths=n),
            dove_prism(window, n, path=1),
            sph(window, +1, n, path=1),
            hwp(window, np.pi / 4, n, path=1),
            pbs(window, 0, 0, 1, n_paths=n),
        ]
    )


def _as_density(state: SinglePhotonState | DensityMatrix, window: OamWindow | None) -> DensityMatrix:
    rho = state.density() if isinstance(state, SinglePhotonState) else state
    if window is not None and rho.window != window:
        raise ShapeMismatchError(f"state on K={rho.window.K if rho.window else None}, expected K={window.K}")
    if len(rho.dims) != 3 or rho.dims[2] != 1:
        raise ShapeMismatchError(f"swap expects a one-path single-photon state, got dims {rho.dims}")
    return rho


def swap_parity_polarization(
    bob_state: SinglePhotonState | DensityMatrix,
    window: OamWindow | None = None,
    atol: float = Tolerances.ATOL,
) -> SwapResult:
    """Move the parity qubit onto polarization: |E,H> -> |E,H>, |O,H> -> |E,V>."""
    rho = _as_density(bob_state, window)
    v_weight = rho.diagonal().reshape(rho.dims)[:, 1, :]
    if np.sqrt(v_weight.max()) > atol:
        raise PreconditionError(f"swap input carries V amplitude {np.sqrt(v_weight.max()):.3g}")
    out = swap_circuit(rho.window).apply_density(rho.with_paths(2))
    return SwapResult(reduce_to(out, 1), reduce_to(out, 0))


def stokes_parameters(rho_pol: DensityMatrix | np.ndarray) -> tuple[float, float, float, float]:
    """(S0, S1, S2, S3); for alpha|H> + beta|V>, S2 = 2 Re(conj(alpha) beta) and S3 = 2 Im(conj(alpha) beta)."""
    m = rho_pol.matrix if isinstance(rho_pol, DensityMatrix) else np.asarray(rho_pol, dtype=complex)
    if m.shape != (2, 2):
        raise ShapeMismatchError(f"Stokes parameters need a 2x2 polarization matrix, got {m.shape}")
    s0 = (m[0, 0] + m[1, 1]).real
    s1 = (m[0, 0] - m[1, 1]).real
    s2 = 2 * m[1, 0].real
    s3 = 2 * m[1, 0].imag
    return float(s0), float(s1), float(s2), float(s3)


def _swapped_polarization(profile: Profile, alpha: complex, beta: complex) -> dict[BellOutcome, DensityMatrix]:
    chi = prepare_polarization(make_chi0(profile), alpha, beta)
    return {o: swap_parity_polarization(collapse(chi, o)).polarization for o in OUTCOMES}


def _polarization_fidelity(rho_pol: DensityMatrix, names: tuple[str, ...], alpha, beta) -> float:
    j = waveplate_matrix(names)
    return fidelity(j @ rho_pol.matrix @ j.conj().T, np.array([alpha, beta]))


def derive_polarization_table(profile: Profile, atol: float = Tolerances.FIDELITY) -> CorrectionTable:
    """Wave-plate corrections that restore alpha|H> + beta|V> after the swap."""
    parity_states(profile)
    swapped = _swapped_polarization(profile, GENERIC_ALPHA, GENERIC_BETA)
    entries = {}
    for outcome, rho_pol in swapped.items():
        scores = {
            names: _polarization_fidelity(rho_pol, names, GENERIC_ALPHA, GENERIC_BETA) for names in WAVEPLATE_CANDIDATES
        }
        entries[outcome] = _unique_candidate(scores, outcome, atol)
    return CorrectionTable(entries=entries)


def teleport_via_swap(
    profile: Profile,
    alpha: complex,
    beta: complex,
    table: CorrectionTable | None = None,
    atol: float = Tolerances.FIDELITY,
) -> list[SwapOutcomeReport]:
    """Swap Bob's parity onto polarization, then correct with wave plates only."""
    table = table or derive_polarization_table(profile, atol)
    chi = prepare_polarization(make_chi0(profile), alpha, beta)
    reports = []
    for outcome in OUTCOMES:
        pol, residual = swap_parity_polarization(collapse(chi, outcome))
        names = table.names(outcome)
        f = _polarization_fidelity(pol, names, alpha, beta)
        if f < 1.0 - atol:
            raise ProtocolIntegrityError(f"{outcome.value}: polarization fidelity {f:.12f} after wave plates")
        j = waveplate_matrix(names)
        corrected = j @ pol.matrix @ j.conj().T
        window = profile.window
        even = sum(residual.matrix[window.index(q), window.index(q)].real for q in window.even_modes)
        reports.append(
            SwapOutcomeReport(
                outcome=outcome,
                waveplates=list(names),
                polarization_fidelity=f,
                stokes=stokes_parameters(corrected),
                residual_even_weight=float(even),
            )
        )
    return reports


# --- Negative control ---


def _weighted_fidelities(
    profile: Profile, alpha: complex, beta: complex
) -> dict[BellOutcome, dict[tuple[str, ...], float]]:
    """p(outcome) * parity fidelity after each candidate correction."""
    chi = prepare_polarization(make_chi0(profile), alpha, beta)
    probabilities = outcome_probabilities(chi)
    out = {}
    for outcome, p in probabilities.items():
        if p <= Tolerances.ATOL:
            continue
        rho = collapse(chi, outcome)
        out[outcome] = {
            names: p * parity_fidelity(correction_ops(names, profile.window).apply_density(rho), alpha, beta)
            for names in CANDIDATES
        }
    return out


def l0_negative_control(
    K: int,
    n_inputs: int,
    rng: np.random.Generator,
    profile: Profile | None = None,
) -> NegativeControlStats:
    """
    Run the l=1 machinery, unchanged, on a resource without the pump's OAM.

    The correction table is the one derived for a uniform l=1 profile on the
    same window. Besides the Haar-sampled statistics, the exact mean over
    the six Pauli eigenstates is reported both for that table and for the
    best fixed assignment of candidates to outcomes.

    Raises:
        ProtocolIntegrityError: when a resource with l != 1 reaches an exact
            mean fidelity of Defaults.CONTROL_CEILING or more
    """
    profile = profile or make_profile("delta", l=0, K=K)
    if profile.window.K != K:
        raise InvalidArgumentError(f"profile window K={profile.window.K} does not match K={K}")
    table = derive_correction_table(make_profile("uniform", l=1, K=K))

    def protocol_mean(weighted) -> float:
        return sum(scores[table.names(o)] for o, scores in weighted.items())

    sampled = [protocol_mean(_weighted_fidelities(profile, *haar_qubit(rng))) for _ in range(n_inputs)]

    design = [_weighted_fidelities(profile, a, b) for a, b in PAULI_STATES]
    exact = float(np.mean([protocol_mean(w) for w in design]))
    optimal = {}
    optimal_mean = 0.0
    for outcome in OUTCOMES:
        averaged = {names: np.mean([w.get(outcome, {}).get(names, 0.0) for w in design]) for names in CANDIDATES}
        best = CANDIDATES[0]
        for names in CANDIDATES[1:]:
            if averaged[names] > averaged[best] + Tolerances.ATOL:
                best = names
        optimal[outcome] = best
        optimal_mean += float(averaged[best])
    skipped = sum(len(OUTCOMES) - len(w) for w in design)
    if skipped:
        logger.warning(f"negative control skipped {skipped} zero-probability outcome(s) over the design states")
    logger.info(f"negative control l={profile.l} K={K}: mean {np.mean(sampled):.4f}, exact {exact:.4f}")
    if profile.l != 1 and exact >= Defaults.CONTROL_CEILING:
        raise ProtocolIntegrityError(
            f"l={profile.l} control reaches exact mean fidelity {exact:.6f}, at or above {Defaults.CONTROL_CEILING}"
        )
    return NegativeControlStats(
        l=profile.l,
        K=K,
        profile_kind=profile.kind,
        n_inputs=n_inputs,
        mean_fidelity=float(np.mean(sampled)) if sampled else exact,
        min_fidelity=float(np.min(sampled)) if sampled else exact,
        max_fidelity=float(np.max(sampled)) if sampled else exact,
        exact_mean_fidelity=exact,
        optimal_table=optimal,
        optimal_exact_mean_fidelity=optimal_mean,
    )
