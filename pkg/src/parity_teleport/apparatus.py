"""Interferometric Bell-state analyzer for photon A and its detector bookkeeping."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .bell import OUTCOMES, bell_state
from .config import Tolerances
from .elements import (
    BsConvention,
    ElementOp,
    apply_to_photon,
    bs_5050,
    compose,
    delay,
    dove_prism,
    hwp,
    oam_parity_sorter,
    pbs,
    sph,
)
from .errors import ConventionInconsistencyError, ShapeMismatchError, WiringError
from .hilbert import DensityMatrix, OamWindow, TwoPhotonState
from .models import BellOutcome

logger = logging.getLogger(__name__)

ENTRY = 0  # entry arm, then the even-charge H arm
ODD = 1  # odd-charge arm, H after its PBS
EVEN_V = 2
ODD_V = 3


@dataclass(frozen=True, eq=False)
class BenchLayout:
    """A pipeline on photon A with named detectors sitting on output paths."""

    window: OamWindow
    n_paths: int
    stages: tuple[ElementOp, ...]
    detectors: tuple[tuple[str, int], ...]
    entry_path: int = ENTRY
    convention: BsConvention = "symmetric"

    def __post_init__(self):
        names = [name for name, _ in self.detectors]
        paths = [path for _, path in self.detectors]
        if not self.detectors:
            raise WiringError("bench has no detectors")
        if len(set(names)) != len(names):
            raise WiringError(f"duplicate detector names in {names}")
        if len(set(paths)) != len(paths):
            raise WiringError(f"two detectors share a path in {self.detectors}")
        for name, path in self.detectors:
            if not 0 <= path < self.n_paths:
                raise WiringError(f"detector {name} on path {path} outside 0..{self.n_paths - 1}")
        if not 0 <= self.entry_path < self.n_paths:
            raise WiringError(f"entry path {self.entry_path} outside 0..{self.n_paths - 1}")
        for op in self.stages:
            if op.window != self.window or op.n_paths != self.n_paths:
                raise ShapeMismatchError("bench stages must share the bench window and path count")

    @cached_property
    def unitary(self) -> ElementOp:
        return compose(list(self.stages), self.window, self.n_paths)

    @property
    def detector_paths(self) -> dict[str, int]:
        return dict(self.detectors)


def build_bell_analyzer(window: OamWindow, convention: BsConvention = "symmetric") -> BenchLayout:
    """
    Parity sorter, Dove prism and sph(+1) on the odd arm, a PBS on each arm,
    HWP(pi/4) on the odd-V and odd-H arms, then two 50:50 beam splitters
    interfering (even-H, odd-V) and (even-V, odd-H).

    The symmetric splitter needs an extra pi/2 delay on each second input for
    the four ports to separate; the Hadamard splitter does not.
    """
    n = 4
    stages = [
        oam_parity_sorter(window, ENTRY, ODD, path_in=ENTRY, n_paths=n),
        dove_prism(window, n, path=ODD),
        sph(window, +1, n, path=ODD),
        pbs(window, ENTRY, ENTRY, EVEN_V, n_paths=n),
        pbs(window, ODD, ODD, ODD_V, n_paths=n),
        hwp(window, np.pi / 4, n, path=ODD_V),
        hwp(window, np.pi / 4, n, path=ODD),
    ]
    if convention == "symmetric":
        stages += [delay(window, np.pi / 2, ODD_V, n), delay(window, np.pi / 2, ODD, n)]
    stages += [
        bs_5050(window, ENTRY, ODD_V, n, convention),
        bs_5050(window, EVEN_V, ODD, n, convention),
    ]
    detectors = (("D1", ENTRY), ("D2", ODD_V), ("D3", EVEN_V), ("D4", ODD))
    layout = BenchLayout(window, n, tuple(stages), detectors, ENTRY, convention)
    logger.debug(f"built Bell analyzer K={window.K} convention={convention}")
    return layout


@dataclass(frozen=True, eq=False)
class DetectorReading:
    detector: str
    path: int
    probability: float
    bob: DensityMatrix | None  # None when the detector cannot fire


def _prepare_input(chi: TwoPhotonState, layout: BenchLayout, atol: float) -> TwoPhotonState:
    if chi.window != layout.window:
        raise ShapeMismatchError(f"state on K={chi.window.K} sent into a K={layout.window.K} bench")
    if chi.n_paths_a == 1:
        amps = np.zeros((chi.window.size, 2, layout.n_paths) + chi.dims_b, dtype=complex)
        amps[:, :, layout.entry_path] = chi.amps[:, :, 0]
        return TwoPhotonState(chi.window, amps)
    if chi.n_paths_a != layout.n_paths:
        raise WiringError(f"photon A carries {chi.n_paths_a} paths, bench has {layout.n_paths}")
    stray = np.delete(chi.amps, layout.entry_path, axis=2)
    if stray.size and np.abs(stray).max() > atol:
        raise WiringError("photon A must enter the bench on its entry path only")
    return chi


def detector_distribution(
    chi: TwoPhotonState,
    layout: BenchLayout,
    atol: float = Tolerances.ATOL,
) -> dict[str, DetectorReading]:
    """
    Push photon A through the bench and read each detector.

    Raises WiringError when probability reaches an output path that no
    detector watches.
    """
    state = apply_to_photon(layout.unitary, "A", _prepare_input(chi, layout, atol), atol)
    amps = state.amps
    watched = set(layout.detector_paths.values())
    for path in range(layout.n_paths):
        if path in watched:
            continue
        weight = float(np.sum(np.abs(amps[:, :, path]) ** 2))
        if weight > atol:
            raise WiringError(f"probability {weight:.3g} exits on unwatched path {path}")

    readings = {}
    d_b = int(np.prod(chi.dims_b))
    for name, path in layout.detectors:
        sub = amps[:, :, path].reshape(-1, d_b)
        p = float(np.linalg.norm(sub) ** 2)
        bob = None
        if p > atol:
            sub = sub / np.sqrt(p)
            bob = DensityMatrix(sub.T @ sub.conj(), chi.dims_b, chi.window)
        readings[name] = DetectorReading(name, path, p, bob)
    return readings


def derive_detector_map(layout: BenchLayout, atol: float = Tolerances.FIDELITY) -> dict[str, BellOutcome]:
    """
    Find which detector each Bell state lands on.

    Every Bell vector (for every even q) must reach exactly one detector
    with certainty, the same one for all q, and the four outcomes must use
    four distinct detectors.
    """
    window = layout.window
    u = layout.unitary
    paths = layout.detector_paths
    found: dict[str, BellOutcome] = {}
    for outcome in OUTCOMES:
        target = None
        for q in window.even_modes:
            state = bell_state(window, q, outcome, layout.n_paths)
            if layout.entry_path != 0:
                state = type(state)(window, np.roll(state.amps, layout.entry_path, axis=2))
            out = u.apply(state).amps
            hits = [name for name, path in paths.items() if np.sum(np.abs(out[:, :, path]) ** 2) > 1.0 - atol]
            if len(hits) != 1:
                raise ConventionInconsistencyError(
                    f"{outcome.value} at q={q} does not land on a single detector ({layout.convention})"
                )
            if target is not None and hits[0] != target:
                raise ConventionInconsistencyError(
                    f"{outcome.value} lands on {target} and {hits[0]} for different charges"
                )
            target = hits[0]
        if target in found:
            raise ConventionInconsistencyError(f"{found[target].value} and {outcome.value} share {target}")
        found[target] = outcome
    logger.info(f"detector map ({layout.convention}): " + ", ".join(f"{d}={o.value}" for d, o in found.items()))
    return {name: found[name] for name, _ in layout.detectors if name in found}
