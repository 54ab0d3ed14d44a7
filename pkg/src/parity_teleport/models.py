from __future__ import annotations

from enum import Enum
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .config import Defaults, Tolerances

# (re, im) pairs keep JSON plain
ComplexPair = tuple[float, float]


def to_complex(pair: ComplexPair) -> complex:
    return complex(pair[0], pair[1])


def to_pair(z: complex) -> ComplexPair:
    z = complex(z)
    return (float(z.real), float(z.imag))


class BellOutcome(str, Enum):
    PHI_PLUS = "PhiPlus"
    PHI_MINUS = "PhiMinus"
    PSI_PLUS = "PsiPlus"
    PSI_MINUS = "PsiMinus"

    @property
    def is_phi(self) -> bool:
        return self in (BellOutcome.PHI_PLUS, BellOutcome.PHI_MINUS)

    @property
    def sign(self) -> int:
        return 1 if self in (BellOutcome.PHI_PLUS, BellOutcome.PSI_PLUS) else -1

    @property
    def bits(self) -> tuple[int, int]:
        """(bit1, bit0): bit1 is the Phi/Psi class, bit0 the +/- sign."""
        return (0 if self.is_phi else 1, 0 if self.sign > 0 else 1)

    @property
    def classical_bits(self) -> str:
        b1, b0 = self.bits
        return f"{b1}{b0}"

    @classmethod
    def from_bits(cls, bit1: int, bit0: int) -> BellOutcome:
        table = {
            (0, 0): cls.PHI_PLUS,
            (0, 1): cls.PHI_MINUS,
            (1, 0): cls.PSI_PLUS,
            (1, 1): cls.PSI_MINUS,
        }
        return table[(bit1, bit0)]


# --- Serialized states ---


class SinglePhotonPayload(BaseModel):
    window_K: int = Field(ge=1)
    n_paths: int = Field(ge=1)
    amps: list[ComplexPair]


class TwoPhotonPayload(BaseModel):
    window_K: int = Field(ge=1)
    n_paths_A: int = Field(ge=1)
    n_paths_B: int = Field(ge=1)
    amps: list[ComplexPair]


class ProfilePayload(BaseModel):
    l: int
    K: int = Field(ge=1)
    kind: str
    params: dict[str, float] = Field(default_factory=dict)
    coeffs: list[tuple[int, float, float]]


# --- Configuration ---


class ProfileSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["uniform", "gaussian", "explicit", "delta"] = "uniform"
    width: float | None = None
    coeffs: list[ComplexPair] | None = None  # explicit: one per window mode, ascending q
    strict: bool = False

    @model_validator(mode="after")
    def _check_params(self):
        if self.kind == "gaussian" and (self.width is None or self.width <= 0):
            raise ValueError("gaussian profile needs a positive width")
        if self.kind == "explicit" and not self.coeffs:
            raise ValueError("explicit profile needs coeffs")
        return self


class SweepSpec(BaseModel):
    parameter: Literal["K", "width"]
    values: list[float] = Field(min_length=1)


class RunConfig(BaseModel):
    profile: ProfileSpec = Field(default_factory=ProfileSpec)
    l: int = 1
    K: int = Field(default=Defaults.WINDOW_K, ge=1, le=Defaults.MAX_WINDOW_K)
    alpha: ComplexPair | None = None
    beta: ComplexPair | None = None
    haar_random: int | None = Field(default=None, ge=1)
    trials: int = Field(default=0, ge=0)
    seed: int | None = Field(default=None, ge=0)
    mode: Literal["projector", "apparatus"] = "projector"
    record_trials: bool = False
    sweep: SweepSpec | None = None

    @model_validator(mode="after")
    def _check_consistency(self):
        if self.trials > 0 and self.seed is None:
            raise ValueError("seed is required when trials > 0")
        if self.haar_random is not None:
            if self.alpha is not None or self.beta is not None:
                raise ValueError("give either alpha/beta or haar_random, not both")
            if self.seed is None:
                raise ValueError("seed is required for haar_random inputs")
        else:
            if self.alpha is None or self.beta is None:
                raise ValueError("alpha and beta are required unless haar_random is set")
            norm = sum(x * x for x in self.alpha) + sum(x * x for x in self.beta)
            if abs(norm - 1.0) > Tolerances.ATOL:
                raise ValueError(f"|alpha|^2 + |beta|^2 must be 1, got {norm}")
        return self


# --- Protocol records ---


class CorrectionTable(BaseModel):
    model_config = ConfigDict(frozen=True)

    entries: dict[BellOutcome, tuple[str, ...]]

    def names(self, outcome: BellOutcome) -> tuple[str, ...]:
        return self.entries[outcome]


class TrialRecord(BaseModel):
    trial_id: int
    alpha: ComplexPair
    beta: ComplexPair
    outcome: BellOutcome
    classical_bits: str
    parity_fidelity_before: float
    parity_fidelity_after: float
    full_oam_fidelity: float


class OutcomeReport(BaseModel):
    outcome: BellOutcome
    classical_bits: str
    probability: float
    uncorrected_state: str
    correction: list[str]
    parity_purity: float
    parity_fidelity_before: float
    parity_fidelity_after: float
    full_oam_fidelity_before: float
    full_oam_fidelity_after: float
    # Bob's 2x2 parity-qubit density matrix right after the measurement, basis (E, O)
    parity_state: list[list[ComplexPair]]
    pair_weights: list[float]  # probability of each pair {q, 1-q}, ordered by the even member q


class ExhaustiveReport(BaseModel):
    alpha: ComplexPair
    beta: ComplexPair
    outcomes: list[OutcomeReport]


class SwapOutcomeReport(BaseModel):
    outcome: BellOutcome
    waveplates: list[str]
    polarization_fidelity: float
    stokes: tuple[float, float, float, float]
    residual_even_weight: float


class FidelityStats(BaseModel):
    min: float
    mean: float
    max: float


class MonteCarloSummary(BaseModel):
    trials: int
    seed: int
    mode: str
    counts: dict[BellOutcome, int]
    frequencies: dict[BellOutcome, float]
    max_deviation: float
    tolerance: float
    within_tolerance: bool
    parity_fidelity: FidelityStats
    full_oam_fidelity: FidelityStats


class NegativeControlStats(BaseModel):
    l: int
    K: int
    profile_kind: str
    n_inputs: int
    mean_fidelity: float
    min_fidelity: float
    max_fidelity: float
    exact_mean_fidelity: float
    optimal_table: dict[BellOutcome, tuple[str, ...]]
    optimal_exact_mean_fidelity: float


class SimReport(BaseModel):
    version: str
    seed: int | None
    config: RunConfig
    negative_control: bool
    detector_map: dict[str, BellOutcome]
    correction_table: dict[BellOutcome, tuple[str, ...]]
    outcome_states: dict[BellOutcome, str]
    exact_probabilities: dict[BellOutcome, float]
    exact: list[ExhaustiveReport]
    parity_fidelity: FidelityStats
    full_oam_fidelity: FidelityStats
    swap: list[SwapOutcomeReport] | None = None
    monte_carlo: MonteCarloSummary | None = None
    trials: list[TrialRecord] | None = None
    control: NegativeControlStats | None = None
