"""
Truncated OAM window, state vectors, density matrices and the parity qubit.

Basis ordering is lexicographic: OAM charge q ascending, then polarization
(H before V), then path ascending. Two-photon amplitudes order photon A's
indices before photon B's. Serialized states use this order.
"""

from __future__ import annotations

import string
from collections.abc import Mapping
from dataclasses import dataclass
from math import prod

import numpy as np

from .config import Defaults, Tolerances
from .errors import InvalidArgumentError, ShapeMismatchError
from .models import SinglePhotonPayload, TwoPhotonPayload

POLARIZATIONS = ("H", "V")


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=complex)
    out.setflags(write=False)
    return out


def _pol_index(pol: str) -> int:
    try:
        return POLARIZATIONS.index(pol)
    except ValueError:
        raise InvalidArgumentError(f"polarization must be 'H' or 'V', got {pol!r}") from None


@dataclass(frozen=True)
class OamWindow:
    """The OAM charges {1-K, ..., K}, closed under q -> 1-q."""

    K: int

    def __post_init__(self):
        if isinstance(self.K, bool) or not isinstance(self.K, (int, np.integer)) or self.K < 1:
            raise InvalidArgumentError(f"window half-width K must be a positive integer, got {self.K!r}")
        if self.K > Defaults.MAX_WINDOW_K:
            raise InvalidArgumentError(f"window half-width K={self.K} exceeds the maximum {Defaults.MAX_WINDOW_K}")
        object.__setattr__(self, "K", int(self.K))

    @property
    def modes(self) -> tuple[int, ...]:
        return tuple(range(1 - self.K, self.K + 1))

    @property
    def size(self) -> int:
        return 2 * self.K

    @property
    def even_modes(self) -> tuple[int, ...]:
        return tuple(q for q in self.modes if q % 2 == 0)

    def __contains__(self, q) -> bool:
        return isinstance(q, (int, np.integer)) and 1 - self.K <= q <= self.K

    def index(self, q: int) -> int:
        if q not in self:
            raise InvalidArgumentError(f"OAM charge {q} outside window {{{1 - self.K},...,{self.K}}}")
        return int(q) - (1 - self.K)

    def parity(self, q: int) -> int:
        """0 for even charges (|E> sector), 1 for odd (|O> sector)."""
        return int(q) % 2

    def pair_index(self, q: int) -> int:
        """Index of the pair {2m, 1-2m} containing q, ordered by the even member."""
        self.index(q)
        even = q if q % 2 == 0 else 1 - q
        return self.even_modes.index(even)


def make_window(K: int) -> OamWindow:
    return OamWindow(K)


@dataclass(frozen=True, eq=False)
class SinglePhotonState:
    window: OamWindow
    amps: np.ndarray  # shape (2K, 2, n_paths)

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex)
        if amps.ndim != 3 or amps.shape[:2] != (self.window.size, 2) or amps.shape[2] < 1:
            raise ShapeMismatchError(
                f"single-photon amplitudes must have shape ({self.window.size}, 2, n_paths), got {amps.shape}"
            )
        if not np.all(np.isfinite(amps)):
            raise InvalidArgumentError("state amplitudes must be finite")
        object.__setattr__(self, "amps", _frozen(amps))

    @property
    def n_paths(self) -> int:
        return self.amps.shape[2]

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.amps.shape

    @property
    def vector(self) -> np.ndarray:
        return self.amps.reshape(-1)

    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))

    def normalize(self) -> SinglePhotonState:
        n = self.norm()
        if n == 0.0:
            raise InvalidArgumentError("cannot normalize the zero vector")
        return SinglePhotonState(self.window, self.amps / n)

    def with_paths(self, n_paths: int) -> SinglePhotonState:
        """Embed into a larger path space; existing paths keep their indices."""
        if n_paths < self.n_paths:
            raise InvalidArgumentError(f"cannot shrink {self.n_paths} paths to {n_paths}")
        amps = np.zeros((self.window.size, 2, n_paths), dtype=complex)
        amps[:, :, : self.n_paths] = self.amps
        return SinglePhotonState(self.window, amps)

    def density(self) -> DensityMatrix:
        v = self.vector
        return DensityMatrix(np.outer(v, v.conj()), self.dims, self.window)

    @classmethod
    def from_vector(cls, window: OamWindow, vector, n_paths: int = 1) -> SinglePhotonState:
        vector = np.asarray(vector, dtype=complex)
        if vector.size != window.size * 2 * n_paths:
            raise ShapeMismatchError(
                f"vector of length {vector.size} does not fit window K={window.K}, {n_paths} paths"
            )
        return cls(window, vector.reshape(window.size, 2, n_paths))

    @classmethod
    def basis(cls, window: OamWindow, q: int, pol: str = "H", path: int = 0, n_paths: int = 1) -> SinglePhotonState:
        return cls.from_oam(window, {q: 1.0}, pol=pol, path=path, n_paths=n_paths)

    @classmethod
    def from_oam(
        cls,
        window: OamWindow,
        coeffs: Mapping[int, complex],
        pol: str = "H",
        path: int = 0,
        n_paths: int = 1,
    ) -> SinglePhotonState:
        """State sum_q coeffs[q] |q, pol, path>, not normalized."""
        if not 0 <= path < n_paths:
            raise InvalidArgumentError(f"path {path} outside 0..{n_paths - 1}")
        amps = np.zeros((window.size, 2, n_paths), dtype=complex)
        p = _pol_index(pol)
        for q, c in coeffs.items():
            amps[window.index(q), p, path] += c
        return cls(window, amps)

    def to_json(self) -> str:
        return SinglePhotonPayload(
            window_K=self.window.K,
            n_paths=self.n_paths,
            amps=[(float(a.real), float(a.imag)) for a in self.vector],
        ).model_dump_json()

    @classmethod
    def from_json(cls, text: str) -> SinglePhotonState:
        payload = SinglePhotonPayload.model_validate_json(text)
        vector = [complex(re, im) for re, im in payload.amps]
        return cls.from_vector(OamWindow(payload.window_K), vector, payload.n_paths)


@dataclass(frozen=True, eq=False)
class TwoPhotonState:
    window: OamWindow
    amps: np.ndarray  # shape (2K, 2, n_paths_a, 2K, 2, n_paths_b)

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex)
        size = self.window.size
        if amps.ndim != 6 or amps.shape[:2] != (size, 2) or amps.shape[3:5] != (size, 2):
            raise ShapeMismatchError(f"two-photon amplitudes have incompatible shape {amps.shape}")
        if not np.all(np.isfinite(amps)):
            raise InvalidArgumentError("state amplitudes must be finite")
        object.__setattr__(self, "amps", _frozen(amps))

    @property
    def n_paths_a(self) -> int:
        return self.amps.shape[2]

    @property
    def n_paths_b(self) -> int:
        return self.amps.shape[5]

    @property
    def dims_a(self) -> tuple[int, int, int]:
        return self.amps.shape[:3]

    @property
    def dims_b(self) -> tuple[int, int, int]:
        return self.amps.shape[3:]

    @property
    def vector(self) -> np.ndarray:
        return self.amps.reshape(-1)

    def matrix(self) -> np.ndarray:
        """Amplitudes as a (dim_A, dim_B) matrix."""
        return self.amps.reshape(prod(self.dims_a), prod(self.dims_b))

    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))

    def normalize(self) -> TwoPhotonState:
        n = self.norm()
        if n == 0.0:
            raise InvalidArgumentError("cannot normalize the zero vector")
        return TwoPhotonState(self.window, self.amps / n)

    def with_paths(self, n_paths_a: int, n_paths_b: int) -> TwoPhotonState:
        if n_paths_a < self.n_paths_a or n_paths_b < self.n_paths_b:
            raise InvalidArgumentError("cannot shrink the path space")
        size = self.window.size
        amps = np.zeros((size, 2, n_paths_a, size, 2, n_paths_b), dtype=complex)
        amps[:, :, : self.n_paths_a, :, :, : self.n_paths_b] = self.amps
        return TwoPhotonState(self.window, amps)

    @classmethod
    def product(cls, a: SinglePhotonState, b: SinglePhotonState) -> TwoPhotonState:
        if a.window != b.window:
            raise ShapeMismatchError("photons live on different OAM windows")
        return cls(a.window, np.multiply.outer(a.amps, b.amps))

    @classmethod
    def from_matrix(cls, window: OamWindow, matrix, n_paths_a: int = 1, n_paths_b: int = 1) -> TwoPhotonState:
        matrix = np.asarray(matrix, dtype=complex)
        size = window.size
        return cls(window, matrix.reshape(size, 2, n_paths_a, size, 2, n_paths_b))

    def to_json(self) -> str:
        return TwoPhotonPayload(
            window_K=self.window.K,
            n_paths_A=self.n_paths_a,
            n_paths_B=self.n_paths_b,
            amps=[(float(a.real), float(a.imag)) for a in self.vector],
        ).model_dump_json()

    @classmethod
    def from_json(cls, text: str) -> TwoPhotonState:
        payload = TwoPhotonPayload.model_validate_json(text)
        vector = np.array([complex(re, im) for re, im in payload.amps])
        size = 2 * payload.window_K * 2
        if vector.size != size * payload.n_paths_A * size * payload.n_paths_B:
            raise ShapeMismatchError("amplitude count does not match window and path counts")
        return cls.from_matrix(
            OamWindow(payload.window_K),
            vector.reshape(size * payload.n_paths_A, size * payload.n_paths_B),
            payload.n_paths_A,
            payload.n_paths_B,
        )


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """
    Density matrix over a tensor of factors with sizes `dims`.

    Single-photon matrices use dims (2K, 2, n_paths); reductions use
    (2K,) for OAM only or (2,) for polarization only.
    """

    matrix: np.ndarray
    dims: tuple[int, ...]
    window: OamWindow | None = None

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=complex)
        d = prod(self.dims)
        if matrix.shape != (d, d):
            raise ShapeMismatchError(f"density matrix shape {matrix.shape} does not match dims {self.dims}")
        if not np.all(np.isfinite(matrix)):
            raise InvalidArgumentError("density matrix entries must be finite")
        object.__setattr__(self, "matrix", _frozen(matrix))
        object.__setattr__(self, "dims", tuple(int(x) for x in self.dims))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)

    def validate(self, atol: float = Tolerances.ATOL) -> DensityMatrix:
        """Raise InvalidArgumentError unless Hermitian, unit trace and PSD."""
        _check_density(self.matrix, atol)
        return self

    def diagonal(self) -> np.ndarray:
        return np.diag(self.matrix).real.copy()

    def with_paths(self, n_paths: int) -> DensityMatrix:
        """Embed a single-photon matrix into a larger path space."""
        if len(self.dims) != 3 or n_paths < self.dims[2]:
            raise InvalidArgumentError(f"cannot embed dims {self.dims} into {n_paths} paths")
        size, _, old = self.dims
        t = self.matrix.reshape(size, 2, old, size, 2, old)
        out = np.zeros((size, 2, n_paths, size, 2, n_paths), dtype=complex)
        out[:, :, :old, :, :, :old] = t
        d = size * 2 * n_paths
        return DensityMatrix(out.reshape(d, d), (size, 2, n_paths), self.window)


@dataclass(frozen=True, eq=False)
class ParityQubit:
    """Two-level state over the ordered basis (|E>, |O>)."""

    rho: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        if rho.shape != (2, 2):
            raise ShapeMismatchError(f"parity qubit must be 2x2, got {rho.shape}")
        object.__setattr__(self, "rho", _frozen(rho))

    def purity(self) -> float:
        return float(np.trace(self.rho @ self.rho).real)

    def trace(self) -> float:
        return float(np.trace(self.rho).real)

    def validate(self, atol: float = Tolerances.ATOL) -> ParityQubit:
        _check_density(self.rho, atol)
        return self

    def fidelity(self, alpha: complex, beta: complex) -> float:
        return fidelity(self, np.array([alpha, beta], dtype=complex))


@dataclass(frozen=True, eq=False)
class PairingResult:
    qubit: ParityQubit
    pair_marginal: np.ndarray  # K x K over the pair index


def _check_density(matrix: np.ndarray, atol: float):
    if not np.allclose(matrix, matrix.conj().T, atol=atol, rtol=0.0):
        raise InvalidArgumentError("density matrix is not Hermitian")
    tr = np.trace(matrix).real
    if abs(tr - 1.0) > atol:
        raise InvalidArgumentError(f"density matrix trace is {tr}, expected 1")
    lowest = np.linalg.eigvalsh((matrix + matrix.conj().T) / 2).min()
    if lowest < Tolerances.EIGENVALUE_FLOOR:
        raise InvalidArgumentError(f"density matrix has negative eigenvalue {lowest}")


def inner(a, b) -> complex:
    """<a|b>, conjugate-linear in the first argument."""
    if type(a) is not type(b) or a.window != b.window or a.amps.shape != b.amps.shape:
        raise ShapeMismatchError("states live on different index schemes")
    return complex(np.vdot(a.amps, b.amps))


def partial_trace_A(state: TwoPhotonState | DensityMatrix) -> DensityMatrix:
    """Bob's reduced density matrix, photon A traced out."""
    if isinstance(state, TwoPhotonState):
        m = state.matrix()
        return DensityMatrix(m.T @ m.conj(), state.dims_b, state.window)
    if isinstance(state, DensityMatrix):
        if len(state.dims) != 6:
            raise ShapeMismatchError(f"expected joint two-photon dims, got {state.dims}")
        d_a, d_b = prod(state.dims[:3]), prod(state.dims[3:])
        rho = np.einsum("ijik->jk", state.matrix.reshape(d_a, d_b, d_a, d_b))
        return DensityMatrix(rho, state.dims[3:], state.window)
    raise ShapeMismatchError(f"cannot trace {type(state).__name__}")


def reduce_to(rho: DensityMatrix, axis: int) -> DensityMatrix:
    """Trace out every factor except `axis` (0 = OAM, 1 = polarization, 2 = path)."""
    n = len(rho.dims)
    if not 0 <= axis < n:
        raise InvalidArgumentError(f"axis {axis} outside 0..{n - 1}")
    letters = string.ascii_letters
    rows = [letters[i] for i in range(n)]
    cols = list(rows)
    cols[axis] = letters[n]
    subscripts = "".join(rows) + "".join(cols) + "->" + rows[axis] + cols[axis]
    reduced = np.einsum(subscripts, rho.matrix.reshape(rho.dims + rho.dims))
    return DensityMatrix(reduced, (rho.dims[axis],), rho.window if axis == 0 else None)


def fidelity(rho, target, atol: float = Tolerances.FIDELITY) -> float:
    """<target|rho|target> for a normalized pure target, clipped to [0, 1]."""
    if isinstance(rho, DensityMatrix):
        matrix = rho.matrix
    elif isinstance(rho, ParityQubit):
        matrix = rho.rho
    else:
        matrix = np.asarray(rho, dtype=complex)
    v = target.vector if isinstance(target, SinglePhotonState) else np.asarray(target, dtype=complex).reshape(-1)
    if v.size != matrix.shape[0]:
        raise ShapeMismatchError(f"target of length {v.size} does not match a {matrix.shape[0]}-dim state")
    if abs(np.vdot(v, v).real - 1.0) > atol:
        raise InvalidArgumentError("fidelity target must be normalized")
    # rounding can push an exact 0 or 1 just outside the range
    return float(np.clip(np.vdot(v, matrix @ v).real, 0.0, 1.0))


def pairing_isometry(state: SinglePhotonState | DensityMatrix, window: OamWindow | None = None) -> PairingResult:
    """
    Factor the OAM space as parity qubit (x) pair index.

    |2m> -> |E> (x) |pair m>, |1-2m> -> |O> (x) |pair m>. Polarization and
    path ride along with the pair index and are traced out with it.

    Args:
        state: single-photon pure state or density matrix with OAM as its
            leading factor
        window: OAM window; taken from the state when omitted

    Returns:
        PairingResult with the 2x2 parity qubit and the K x K pair marginal
    """
    if isinstance(state, SinglePhotonState):
        v = state.vector
        matrix, dims, window = np.outer(v, v.conj()), state.dims, window or state.window
    else:
        matrix, dims, window = state.matrix, state.dims, window or state.window
    if window is None or dims[0] != window.size:
        raise ShapeMismatchError("state OAM factor does not match the window")
    rest = prod(dims[1:])
    K = window.K
    # order[p*K + k] is the window index holding parity p, pair k
    order = np.empty(window.size, dtype=int)
    for q in window.modes:
        order[window.parity(q) * K + window.pair_index(q)] = window.index(q)
    r = matrix.reshape(window.size, rest, window.size, rest)
    t = r[order][:, :, order].reshape(2, K, rest, 2, K, rest)
    qubit = np.einsum("akrbkr->ab", t)
    pairs = np.einsum("pkrplr->kl", t)
    return PairingResult(ParityQubit(qubit), pairs)
