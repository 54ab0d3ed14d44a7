"""Down-converted two-photon resource state and single-photon parity states."""

from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .config import Defaults, Tolerances
from .elements import ElementOp, hwp, qwp
from .errors import (
    AsymmetricProfileError,
    DegenerateProfileError,
    InvalidArgumentError,
    UnsupportedPumpError,
)
from .hilbert import OamWindow, SinglePhotonState, TwoPhotonState
from .models import ProfilePayload, ProfileSpec, to_complex

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Profile:
    """Coefficients c_m of the pair |m>_A |l-m>_B, with c_m = c_{l-m}."""

    window: OamWindow
    l: int
    coeffs: np.ndarray  # one per window mode, ascending q
    kind: str = "explicit"
    params: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=complex)
        if coeffs.shape != (self.window.size,):
            raise InvalidArgumentError(f"expected {self.window.size} coefficients, got {coeffs.shape}")
        if not np.all(np.isfinite(coeffs)):
            raise InvalidArgumentError("profile coefficients must be finite")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        norm = float(np.sum(np.abs(coeffs) ** 2))
        if abs(norm - 1.0) > Tolerances.ATOL:
            raise InvalidArgumentError(f"profile is not normalized (sum |c|^2 = {norm})")
        for m in self.window.modes:
            if self.c(m) != self.c(self.l - m):
                raise AsymmetricProfileError(f"c_{m} != c_{self.l - m}")

    def c(self, m: int) -> complex:
        if m not in self.window:
            return 0j
        return complex(self.coeffs[self.window.index(m)])

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(m for m in self.window.modes if self.c(m) != 0)

    def even_weight(self) -> float:
        return float(sum(abs(self.c(m)) ** 2 for m in self.window.even_modes))

    def to_json(self) -> str:
        return ProfilePayload(
            l=self.l,
            K=self.window.K,
            kind=self.kind,
            params=dict(self.params),
            coeffs=[(m, self.c(m).real, self.c(m).imag) for m in self.window.modes],
        ).model_dump_json()

    @classmethod
    def from_json(cls, text: str) -> Profile:
        payload = ProfilePayload.model_validate_json(text)
        window = OamWindow(payload.K)
        coeffs = np.zeros(window.size, dtype=complex)
        for m, re, im in payload.coeffs:
            coeffs[window.index(m)] = complex(re, im)
        return cls(window, payload.l, coeffs, payload.kind, payload.params)


def _raw_coefficients(kind: str, window: OamWindow, l: int, width, coeffs) -> np.ndarray:
    modes = np.array(window.modes, dtype=float)
    if kind == "uniform":
        return np.ones(window.size, dtype=complex)
    if kind == "gaussian":
        if width is None or width <= 0:
            raise InvalidArgumentError(f"gaussian width must be positive, got {width}")
        return np.exp(-((modes - l / 2) ** 2) / (2 * width**2)).astype(complex)
    if kind == "delta":
        centre = {int(np.floor(l / 2)), int(np.ceil(l / 2))}
        return np.array([1.0 if m in centre else 0.0 for m in window.modes], dtype=complex)
    if kind == "explicit":
        if isinstance(coeffs, Mapping):
            raw = np.zeros(window.size, dtype=complex)
            for m, c in coeffs.items():
                if m in window:
                    raw[window.index(m)] = c
            return raw
        raw = np.asarray(coeffs, dtype=complex)
        if raw.shape != (window.size,):
            raise InvalidArgumentError(
                f"explicit profile needs {window.size} coefficients (one per window mode), got {raw.size}"
            )
        return raw
    raise InvalidArgumentError(f"unknown profile kind {kind!r}")


def make_profile(
    kind: str = "uniform",
    l: int = Defaults.PUMP_CHARGE,
    K: int = Defaults.WINDOW_K,
    width: float | None = None,
    coeffs: Sequence[complex] | Mapping[int, complex] | None = None,
    strict: bool = False,
) -> Profile:
    """
    Build a normalized symmetric profile.

    Coefficients whose partner l-m falls outside the window are clipped,
    the rest symmetrized as (c_m + c_{l-m})/2 and normalized.

    Args:
        kind: uniform | gaussian | explicit | delta
        l: pump charge
        K: window half-width
        width: gaussian width in units of OAM charge, centred at l/2
        coeffs: explicit coefficients, one per window mode or a map m -> c_m
        strict: reject asymmetric explicit input instead of symmetrizing

    Returns:
        Profile with exact symmetry and unit norm
    """
    window = OamWindow(K)
    raw = _raw_coefficients(kind, window, l, width, coeffs)
    if not np.all(np.isfinite(raw)):
        raise InvalidArgumentError("profile coefficients must be finite")
    clipped = np.array(
        [raw[window.index(m)] if (l - m) in window else 0j for m in window.modes],
        dtype=complex,
    )
    partner = np.array(
        [clipped[window.index(l - m)] if (l - m) in window else 0j for m in window.modes],
        dtype=complex,
    )
    if strict and not np.allclose(clipped, partner, atol=Tolerances.ATOL, rtol=0.0):
        raise AsymmetricProfileError("explicit coefficients violate c_m = c_{l-m}")
    sym = (clipped + partner) / 2
    norm = np.linalg.norm(sym)
    if norm == 0.0 or not np.isfinite(norm):
        raise DegenerateProfileError(f"{kind} profile vanishes on window K={K} for l={l}")
    params = {"width": float(width)} if kind == "gaussian" else {}
    return Profile(window, l, sym / norm, kind, params)


def profile_from_spec(spec: ProfileSpec, l: int, K: int) -> Profile:
    coeffs = [to_complex(c) for c in spec.coeffs] if spec.coeffs else None
    return make_profile(spec.kind, l=l, K=K, width=spec.width, coeffs=coeffs, strict=spec.strict)


def random_profile(K: int, rng: np.random.Generator, l: int = 1) -> Profile:
    coeffs = rng.normal(size=2 * K) + 1j * rng.normal(size=2 * K)
    return make_profile("explicit", l=l, K=K, coeffs=coeffs)


def make_chi0(profile: Profile) -> TwoPhotonState:
    """sum_m c_m |m, H>_A |l-m, H>_B, one path per photon."""
    window = profile.window
    amps = np.zeros((window.size, 2, 1, window.size, 2, 1), dtype=complex)
    for m in profile.support:
        amps[window.index(m), 0, 0, window.index(profile.l - m), 0, 0] = profile.c(m)
    return TwoPhotonState(window, amps)


def parity_states(profile: Profile) -> tuple[SinglePhotonState, SinglePhotonState]:
    """|E> = sqrt2 sum c_2m |2m>, |O> = sqrt2 sum c_2m |1-2m>, both H-polarized on path 0."""
    if profile.l != 1:
        raise UnsupportedPumpError(f"parity states need pump charge l=1, got l={profile.l}")
    window = profile.window
    root2 = np.sqrt(2)
    even = {q: root2 * profile.c(q) for q in window.modes if q % 2 == 0}
    odd = {q: root2 * profile.c(q) for q in window.modes if q % 2 == 1}
    return SinglePhotonState.from_oam(window, even), SinglePhotonState.from_oam(window, odd)


def _check_qubit(alpha: complex, beta: complex, atol: float):
    norm = abs(alpha) ** 2 + abs(beta) ** 2
    if abs(norm - 1.0) > atol:
        raise InvalidArgumentError(f"|alpha|^2 + |beta|^2 = {norm}, expected 1")


def prepare_polarization(
    chi0: TwoPhotonState,
    alpha: complex,
    beta: complex,
    atol: float = Tolerances.ATOL,
) -> TwoPhotonState:
    """Rotate photon A's polarization H -> alpha|H> + beta|V> on every OAM mode."""
    _check_qubit(alpha, beta, atol)
    alpha, beta = complex(alpha), complex(beta)
    u = np.array([[alpha, -beta.conjugate()], [beta, alpha.conjugate()]], dtype=complex)
    amps = np.einsum("ij,qjabcd->qiabcd", u, chi0.amps)
    return TwoPhotonState(chi0.window, amps)


def preparation_waveplates(
    window: OamWindow,
    alpha: complex,
    beta: complex,
    n_paths: int = 1,
    atol: float = Tolerances.ATOL,
) -> list[ElementOp]:
    """
    Quarter- then half-wave plate taking |H> to alpha|H> + beta|V> up to a global phase.

    A QWP at theta leaves H with azimuth theta and ellipticity -theta; a HWP
    at phi reflects the azimuth to 2 phi - azimuth and flips the handedness.
    """
    _check_qubit(alpha, beta, atol)
    alpha, beta = complex(alpha), complex(beta)
    s1 = abs(alpha) ** 2 - abs(beta) ** 2
    cross = alpha.conjugate() * beta
    s2, s3 = 2 * cross.real, 2 * cross.imag
    chi = 0.5 * np.arcsin(np.clip(s3, -1.0, 1.0))
    psi = 0.5 * np.arctan2(s2, s1)
    theta = chi
    phi = (psi + theta) / 2
    return [qwp(window, theta, n_paths), hwp(window, phi, n_paths)]
