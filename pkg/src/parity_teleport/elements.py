"""
Optical elements as operators on the single-photon (OAM x pol x path) space.

Mirrors never appear here: they are idealized as pure routing. Elements
that shift or reflect OAM (Dove prism, spiral phase hologram) can push the
window's edge mode outside the window; those columns are left out of the
operator's domain and applying the operator to amplitude on them raises
SupportOverflowError instead of silently losing it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict

from .config import Tolerances
from .errors import InvalidArgumentError, ShapeMismatchError, SupportOverflowError
from .hilbert import DensityMatrix, OamWindow, SinglePhotonState, TwoPhotonState

logger = logging.getLogger(__name__)

ElementKind = Literal[
    "identity", "dove", "sph", "dp_sph", "parity_phase", "delay",
    "sorter", "pbs", "bs", "hwp", "qwp",
]
BsConvention = Literal["symmetric", "hadamard"]

OAM_KINDS = {"dove", "sph", "dp_sph", "parity_phase", "delay"}
JONES_KINDS = {"hwp", "qwp"}
ROUTING_KINDS = {"sorter", "pbs", "bs"}


class ElementSpec(BaseModel):
    """Descriptor of one primitive element."""

    model_config = ConfigDict(frozen=True)

    kind: ElementKind
    path: int | None = None  # local elements act on this path only; None means every path
    charge: int | None = None
    angle: float | None = None
    ports: tuple[int, ...] = ()  # sorter (in, even, odd); pbs (in, H, V); bs (a, b)
    convention: BsConvention = "symmetric"


def hwp_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(2 * theta), np.sin(2 * theta)
    return np.array([[c, s], [s, -c]], dtype=complex)


def qwp_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    rot = np.array([[c, -s], [s, c]], dtype=complex)
    return rot @ np.diag([1.0, 1.0j]) @ rot.T


def bs_matrix(convention: BsConvention) -> np.ndarray:
    """2x2 action on the (a, b) port amplitudes."""
    if convention == "symmetric":
        return np.array([[1.0, 1.0j], [1.0j, 1.0]], dtype=complex) / np.sqrt(2)
    return np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / np.sqrt(2)


def _oam_image(spec: ElementSpec, q: int) -> tuple[int, complex]:
    if spec.kind == "dove":
        return -q, 1.0
    if spec.kind == "sph":
        return q + spec.charge, 1.0
    if spec.kind == "dp_sph":
        return 1 - q, 1.0
    if spec.kind == "parity_phase":
        return q, np.exp(1j * spec.angle) if q % 2 else 1.0
    return q, np.exp(1j * spec.angle)  # delay


def _transposition(n_paths: int, a: int, b: int) -> np.ndarray:
    perm = np.arange(n_paths)
    perm[a], perm[b] = b, a
    return perm


def _validate_spec(spec: ElementSpec, n_paths: int):
    if spec.path is not None and not 0 <= spec.path < n_paths:
        raise InvalidArgumentError(f"{spec.kind}: path {spec.path} outside 0..{n_paths - 1}")
    if spec.kind == "sph" and spec.charge not in (1, -1):
        raise InvalidArgumentError(f"sph charge must be +1 or -1, got {spec.charge}")
    if spec.kind in {"parity_phase", "delay", "hwp", "qwp"} and spec.angle is None:
        raise InvalidArgumentError(f"{spec.kind} needs an angle")
    if spec.kind in ROUTING_KINDS:
        expected = 2 if spec.kind == "bs" else 3
        if len(spec.ports) != expected:
            raise InvalidArgumentError(f"{spec.kind} needs {expected} ports, got {spec.ports}")
        if any(not 0 <= p < n_paths for p in spec.ports):
            raise InvalidArgumentError(f"{spec.kind}: ports {spec.ports} outside 0..{n_paths - 1}")
        outputs = spec.ports if spec.kind == "bs" else spec.ports[1:]
        if outputs[0] == outputs[1]:
            raise InvalidArgumentError(f"{spec.kind}: path collision on {outputs[0]}")


@lru_cache(maxsize=512)
def _primitive(spec: ElementSpec, K: int, n_paths: int) -> tuple[np.ndarray, np.ndarray]:
    """(matrix, domain) of one primitive on window K."""
    window = OamWindow(K)
    size = window.size
    dim = size * 2 * n_paths
    u = np.zeros((dim, dim), dtype=complex)
    domain = np.ones(dim, dtype=bool)

    def idx(q: int, pol: int, path: int) -> int:
        return (window.index(q) * 2 + pol) * n_paths + path

    for q in window.modes:
        for pol in range(2):
            for path in range(n_paths):
                col = idx(q, pol, path)
                in_scope = spec.path is None or spec.path == path
                if spec.kind == "identity" or (not in_scope and spec.kind not in ROUTING_KINDS):
                    u[col, col] = 1.0
                elif spec.kind in OAM_KINDS:
                    target, phase = _oam_image(spec, q)
                    if target in window:
                        u[idx(target, pol, path), col] = phase
                    else:
                        domain[col] = False
                elif spec.kind in JONES_KINDS:
                    jones = hwp_matrix(spec.angle) if spec.kind == "hwp" else qwp_matrix(spec.angle)
                    for out in range(2):
                        u[idx(q, out, path), col] = jones[out, pol]
                elif spec.kind == "bs":
                    a, b = spec.ports
                    if path in (a, b):
                        m = bs_matrix(spec.convention)
                        j = 0 if path == a else 1
                        u[idx(q, pol, a), col] = m[0, j]
                        u[idx(q, pol, b), col] = m[1, j]
                    else:
                        u[col, col] = 1.0
                else:
                    entry, first, second = spec.ports
                    if spec.kind == "sorter":
                        exit_port = first if q % 2 == 0 else second
                    else:
                        exit_port = first if pol == 0 else second
                    perm = _transposition(n_paths, entry, exit_port)
                    u[idx(q, pol, perm[path]), col] = 1.0
    u.setflags(write=False)
    domain.setflags(write=False)
    return u, domain


@dataclass(frozen=True, eq=False)
class ElementOp:
    """
    Operator of an element or of a composed pipeline.

    `domain` marks basis columns whose image stays inside the window; the
    operator is unitary exactly when the domain is full.
    """

    specs: tuple[ElementSpec, ...]
    window: OamWindow
    n_paths: int
    matrix: np.ndarray
    domain: np.ndarray
    rebuildable: bool = True

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_total(self) -> bool:
        return bool(self.domain.all())

    def is_unitary(self, atol: float = Tolerances.ATOL) -> bool:
        """U^dag U equals the projector onto the domain (the identity for total ops)."""
        gram = self.matrix.conj().T @ self.matrix
        return bool(np.allclose(gram, np.diag(self.domain.astype(float)), atol=atol, rtol=0.0))

    def dagger(self) -> ElementOp:
        if not self.is_total:
            raise InvalidArgumentError("only window-internal operators have an adjoint element")
        m = self.matrix.conj().T.copy()
        m.setflags(write=False)
        return ElementOp((), self.window, self.n_paths, m, self.domain, rebuildable=False)

    def _check_shape(self, window: OamWindow, n_paths: int):
        if window != self.window or n_paths != self.n_paths:
            raise ShapeMismatchError(
                f"operator on K={self.window.K}, {self.n_paths} paths applied to K={window.K}, {n_paths} paths"
            )

    def _check_support(self, weights: np.ndarray, atol: float):
        leaked = weights[~self.domain]
        if leaked.size and np.sqrt(leaked.max()) > atol:
            raise SupportOverflowError(
                f"{self.label()} would move amplitude {np.sqrt(leaked.max()):.3g} outside the OAM window"
            )

    def apply(self, state: SinglePhotonState, atol: float = Tolerances.ATOL) -> SinglePhotonState:
        self._check_shape(state.window, state.n_paths)
        self._check_support(np.abs(state.vector) ** 2, atol)
        return SinglePhotonState.from_vector(state.window, self.matrix @ state.vector, state.n_paths)

    def apply_density(self, rho: DensityMatrix, atol: float = Tolerances.ATOL) -> DensityMatrix:
        if rho.window is None or len(rho.dims) != 3:
            raise ShapeMismatchError("elements act on single-photon density matrices")
        self._check_shape(rho.window, rho.dims[2])
        self._check_support(rho.diagonal(), atol)
        u = self.matrix
        return DensityMatrix(u @ rho.matrix @ u.conj().T, rho.dims, rho.window)

    def label(self) -> str:
        if not self.specs:
            return "adjoint" if not self.rebuildable else "identity"
        return ";".join(spec_label(s) for s in self.specs)


def kind_text(kind: str, charge: int | None = None, angle: float | None = None, convention: str | None = None) -> str:
    """Element kind as written in bench programs: sph(-1), hwp(0.785...), bs(hadamard)."""
    if kind == "sph" and charge == -1:
        return "sph(-1)"
    if kind == "bs" and convention == "hadamard":
        return "bs(hadamard)"
    if angle is not None:
        return f"{kind}({angle!r})"
    return kind


def spec_label(spec: ElementSpec) -> str:
    text = kind_text(spec.kind, spec.charge, spec.angle, spec.convention)
    if spec.ports:
        text += "[" + ",".join(str(p) for p in spec.ports) + "]"
    if spec.path is not None:
        text += f"@{spec.path}"
    return text


def build(spec: ElementSpec, window: OamWindow, n_paths: int = 1) -> ElementOp:
    """Operator of one primitive element on the given window and path count."""
    _validate_spec(spec, n_paths)
    matrix, domain = _primitive(spec, window.K, n_paths)
    return ElementOp((spec,), window, n_paths, matrix, domain)


def identity(window: OamWindow, n_paths: int = 1) -> ElementOp:
    return build(ElementSpec(kind="identity"), window, n_paths)


def dove_prism(window: OamWindow, n_paths: int = 1, path: int | None = None) -> ElementOp:
    """Image reflection |q> -> |-q>; the edge mode q=K has no image in the window."""
    return build(ElementSpec(kind="dove", path=path), window, n_paths)


def sph(window: OamWindow, charge: int = 1, n_paths: int = 1, path: int | None = None) -> ElementOp:
    """Spiral phase hologram |q> -> |q + charge>."""
    return build(ElementSpec(kind="sph", charge=charge, path=path), window, n_paths)


def dp_sph(window: OamWindow, n_paths: int = 1, path: int | None = None) -> ElementOp:
    """Dove prism followed by sph(+1): the involution |q> -> |1-q>, swapping |E> and |O>."""
    return build(ElementSpec(kind="dp_sph", path=path), window, n_paths)


def parity_phase(window: OamWindow, phi: float, n_paths: int = 1, path: int | None = None) -> ElementOp:
    """Phase e^{i phi} on odd charges; diag(1, e^{i phi}) on the parity qubit."""
    return build(ElementSpec(kind="parity_phase", angle=float(phi), path=path), window, n_paths)


def delay(window: OamWindow, phi: float, path: int, n_paths: int) -> ElementOp:
    return build(ElementSpec(kind="delay", angle=float(phi), path=path), window, n_paths)


def oam_parity_sorter(
    window: OamWindow,
    path_even: int,
    path_odd: int,
    path_in: int = 0,
    n_paths: int | None = None,
) -> ElementOp:
    """Route even charges from path_in to path_even and odd charges to path_odd."""
    if path_even == path_odd:
        raise InvalidArgumentError(f"sorter outputs collide on path {path_even}")
    n_paths = n_paths or max(path_in, path_even, path_odd) + 1
    return build(ElementSpec(kind="sorter", ports=(path_in, path_even, path_odd)), window, n_paths)


def pbs(window: OamWindow, path_in: int, path_H: int, path_V: int, n_paths: int | None = None) -> ElementOp:
    if path_H == path_V:
        raise InvalidArgumentError(f"PBS outputs collide on path {path_H}")
    n_paths = n_paths or max(path_in, path_H, path_V) + 1
    return build(ElementSpec(kind="pbs", ports=(path_in, path_H, path_V)), window, n_paths)


def bs_5050(
    window: OamWindow,
    path_a: int,
    path_b: int,
    n_paths: int | None = None,
    convention: BsConvention = "symmetric",
) -> ElementOp:
    if path_a == path_b:
        raise InvalidArgumentError(f"beam splitter ports collide on path {path_a}")
    n_paths = n_paths or max(path_a, path_b) + 1
    return build(ElementSpec(kind="bs", ports=(path_a, path_b), convention=convention), window, n_paths)


def hwp(window: OamWindow, theta: float, n_paths: int = 1, path: int | None = None) -> ElementOp:
    return build(ElementSpec(kind="hwp", angle=float(theta), path=path), window, n_paths)


def qwp(window: OamWindow, theta: float, n_paths: int = 1, path: int | None = None) -> ElementOp:
    return build(ElementSpec(kind="qwp", angle=float(theta), path=path), window, n_paths)


def compose(
    ops: list[ElementOp],
    window: OamWindow | None = None,
    n_paths: int | None = None,
) -> ElementOp:
    """
    Product of operators in application order (first element acts first).

    Window-internal operators are multiplied directly. When any operator is
    partial, the pipeline is rebuilt on a window padded by one charge per
    element, so intermediate excursions past the edge (a bare Dove prism
    before its hologram) are carried exactly; the result's domain keeps the
    columns whose final image is back inside the window.
    """
    if not ops:
        if window is None:
            raise InvalidArgumentError("compose([]) needs a window")
        return identity(window, n_paths or 1)
    window = ops[0].window
    n_paths = ops[0].n_paths
    for op in ops:
        if op.window != window or op.n_paths != n_paths:
            raise ShapeMismatchError("composed operators must share window and path count")
    specs = tuple(s for op in ops for s in op.specs)
    rebuildable = all(op.rebuildable for op in ops)

    if all(op.is_total for op in ops):
        u = np.eye(ops[0].dim, dtype=complex)
        for op in ops:
            u = op.matrix @ u
        u.setflags(write=False)
        return ElementOp(specs, window, n_paths, u, np.ones(u.shape[0], dtype=bool), rebuildable)

    if not rebuildable:
        raise InvalidArgumentError("cannot compose an adjoint with a window-leaking element")
    pad = len(specs)
    big_window = OamWindow(window.K + pad)
    big = np.eye(big_window.size * 2 * n_paths, dtype=complex)
    for spec in specs:
        big = build(spec, big_window, n_paths).matrix @ big
    inner_idx = np.arange(big.shape[0]).reshape(big_window.size, 2, n_paths)[pad : pad + window.size].reshape(-1)
    columns = big[:, inner_idx]
    inside = np.sum(np.abs(columns[inner_idx]) ** 2, axis=0)
    domain = inside > 1.0 - Tolerances.ATOL
    u = columns[inner_idx].copy()
    u[:, ~domain] = 0.0
    u.setflags(write=False)
    domain.setflags(write=False)
    return ElementOp(specs, window, n_paths, u, domain)


def apply_to_photon(
    op: ElementOp,
    which: Literal["A", "B"],
    state: TwoPhotonState,
    atol: float = Tolerances.ATOL,
) -> TwoPhotonState:
    """op (x) I for which='A', I (x) op for which='B'."""
    m = state.matrix()
    if which == "A":
        op._check_shape(state.window, state.n_paths_a)
        op._check_support(np.sum(np.abs(m) ** 2, axis=1), atol)
        out = op.matrix @ m
    elif which == "B":
        op._check_shape(state.window, state.n_paths_b)
        op._check_support(np.sum(np.abs(m) ** 2, axis=0), atol)
        out = m @ op.matrix.T
    else:
        raise InvalidArgumentError(f"photon must be 'A' or 'B', got {which!r}")
    return TwoPhotonState.from_matrix(state.window, out, state.n_paths_a, state.n_paths_b)
