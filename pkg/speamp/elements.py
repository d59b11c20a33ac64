"""Linear-optical elements acting on sparse Fock states.

Each element is a linear map on creation operators, a_in^dagger -> sum_j U[j, in] a_j^dagger.
A basis ket is rewritten as a monomial of creation operators acting on the modes the element
does not touch, the substitution is expanded photon by photon, and the bosonic factors are
restored. No dense unitary over the Fock space is ever built.

Sign conventions: the 50:50 beam splitter sends in1 -> (out1 + out2)/sqrt(2) and
in2 -> (out1 - out2)/sqrt(2). The VBS sends its used input to sqrt(t) out_t + sqrt(1-t) out_r;
its second, never-excited input carries the (sqrt(1-t), -sqrt(t)) column.
"""

from __future__ import annotations

import cmath
import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from enum import Enum
from functools import reduce
from itertools import product
from typing import Iterable, Optional

import numpy as np

from speamp.config import UNITARITY_TOLERANCE
from speamp.fock import Ket, PureState
from speamp.models import H, ModeId, ParameterError, Polarization, RegistryError, V

logger = logging.getLogger(__name__)

SQRT_HALF = 1.0 / math.sqrt(2.0)


class ElementKind(Enum):
    VBS = "vbs"
    BS50 = "bs50"
    PBS = "pbs"
    POL_PHASE_FLIP = "pol_phase_flip"
    MODE_PHASE = "mode_phase"


@dataclass(frozen=True)
class OpticalElement:
    """A unitary mode transformation plus the spatial modes it connects."""

    kind: ElementKind
    inputs: tuple[str, ...]
    outputs: tuple[str, ...] = ()
    t: Optional[float] = None
    axis: Optional[Polarization] = None
    phase: Optional[float] = None

    def __post_init__(self):
        if self.kind is ElementKind.VBS and not (self.t is not None and 0.0 <= self.t <= 1.0):
            raise ParameterError(f"VBS transmission must lie in [0, 1], got {self.t}")
        if self.kind is ElementKind.POL_PHASE_FLIP and self.axis is None:
            raise ParameterError("polarization flip needs an axis")
        if self.kind is ElementKind.MODE_PHASE and (self.phase is None or not math.isfinite(self.phase)):
            raise ParameterError(f"mode phase must be a finite number, got {self.phase}")
        if set(self.inputs) & set(self.outputs):
            raise RegistryError(f"{self.kind.value}: inputs {self.inputs} overlap outputs {self.outputs}")
        u = self.single_photon_matrix()
        if not np.allclose(u.conj().T @ u, np.eye(u.shape[1]), rtol=0.0, atol=UNITARITY_TOLERANCE):
            raise ValueError(f"{self} is not unitary")

    @property
    def is_diagonal(self) -> bool:
        return self.kind in (ElementKind.POL_PHASE_FLIP, ElementKind.MODE_PHASE)

    def single_photon_matrix(self) -> np.ndarray:
        """Single-photon mode matrix, columns = inputs, rows = outputs.

        VBS and BS50 act identically on both polarizations, so their matrix is over spatial
        ports; the PBS matrix is over the (H, V) slots of its input; phase elements are diagonal
        over the (H, V) slots of their mode.
        """
        if self.kind is ElementKind.VBS:
            st, sr = math.sqrt(self.t), math.sqrt(1.0 - self.t)
            return np.array([[st, sr], [sr, -st]])
        if self.kind is ElementKind.BS50:
            return SQRT_HALF * np.array([[1.0, 1.0], [1.0, -1.0]])
        if self.kind is ElementKind.PBS:
            return np.eye(2)
        return np.diag([self.slot_factor(Polarization.H), self.slot_factor(Polarization.V)])

    def slot_factor(self, polarization: Polarization) -> complex:
        """Per-photon phase a diagonal element applies to the given slot of its mode."""
        if self.kind is ElementKind.POL_PHASE_FLIP:
            return -1.0 if polarization is self.axis else 1.0
        if self.kind is ElementKind.MODE_PHASE:
            return cmath.exp(1j * self.phase)
        raise TypeError(f"{self.kind.value} is not a diagonal element")

    def transfer(self) -> dict[ModeId, list[tuple[ModeId, float]]]:
        """Image of every input creation operator as (output slot, coefficient) pairs."""
        if self.kind is ElementKind.PBS:
            (src,) = self.inputs
            out_h, out_v = self.outputs
            return {H(src): [(H(out_h), 1.0)], V(src): [(V(out_v), 1.0)]}

        u = self.single_photon_matrix()
        ports = self.inputs if self.kind is ElementKind.BS50 else self.inputs[:1]
        result = {}
        for col, src in enumerate(ports):
            for mode in (H, V):
                result[mode(src)] = [(mode(dst), float(u[row, col])) for row, dst in enumerate(self.outputs)]
        return result

    def apply(self, state: PureState) -> PureState:
        for label in self.inputs + self.outputs:
            if label not in state.registry:
                raise RegistryError(f"{self.kind.value}: mode {label!r} is not registered")
        if self.is_diagonal:
            return _apply_diagonal(state, self)
        return _apply_linear(state, self.transfer())

    def __str__(self) -> str:
        wiring = f"{','.join(self.inputs)}->{','.join(self.outputs)}" if self.outputs else self.inputs[0]
        extra = {"t": self.t, "axis": self.axis and self.axis.value, "phase": self.phase}
        params = ", ".join(f"{k}={v}" for k, v in extra.items() if v is not None)
        return f"{self.kind.value}({wiring}{', ' + params if params else ''})"


def _apply_linear(state: PureState, transfer: dict[ModeId, list[tuple[ModeId, float]]]) -> PureState:
    registry = state.registry
    routes = {
        registry.index(src): [(registry.index(dst), c) for dst, c in images if c != 0.0]
        for src, images in transfer.items()
    }

    out: dict[Ket, complex] = defaultdict(complex)
    for ket, amp in state.terms.items():
        rest = list(ket)
        photons = []
        norm = 1
        for i, images in routes.items():
            n = ket[i]
            if n:
                rest[i] = 0
                photons.extend([images] * n)
                norm *= math.factorial(n)
        if not photons:
            out[ket] += amp
            continue

        base = amp / math.sqrt(norm)
        for choice in product(*photons):
            coeff = base
            added: Counter[int] = Counter()
            for j, c in choice:
                coeff *= c
                added[j] += 1
            new = rest.copy()
            bosonic = 1
            for j, m in added.items():
                bosonic *= math.factorial(rest[j] + m) // math.factorial(rest[j])
                new[j] += m
            out[tuple(new)] += coeff * math.sqrt(bosonic)

    result = PureState.from_terms(registry, out)
    logger.debug(f"linear element: {len(state)} -> {len(result)} terms")
    return result


def _apply_diagonal(state: PureState, element: OpticalElement) -> PureState:
    (label,) = element.inputs
    registry = state.registry
    ih, iv = registry.index(H(label)), registry.index(V(label))
    fh, fv = element.slot_factor(Polarization.H), element.slot_factor(Polarization.V)
    out = {ket: amp * fh ** ket[ih] * fv ** ket[iv] for ket, amp in state.terms.items()}
    return PureState.from_terms(registry, out)


# --- Element constructors ---


def vbs(src: str, out_t: str, out_r: str, t: float) -> OpticalElement:
    return OpticalElement(ElementKind.VBS, inputs=(src,), outputs=(out_t, out_r), t=t)


def bs50(in1: str, in2: str, out1: str, out2: str) -> OpticalElement:
    return OpticalElement(ElementKind.BS50, inputs=(in1, in2), outputs=(out1, out2))


def pbs(src: str, out_h: str, out_v: str) -> OpticalElement:
    return OpticalElement(ElementKind.PBS, inputs=(src,), outputs=(out_h, out_v))


def polarization_flip(spatial: str, axis: Polarization) -> OpticalElement:
    return OpticalElement(ElementKind.POL_PHASE_FLIP, inputs=(spatial,), axis=axis)


def phase_shift(spatial: str, phase: float) -> OpticalElement:
    return OpticalElement(ElementKind.MODE_PHASE, inputs=(spatial,), phase=phase)


# --- Operations ---


def vbs_apply(state: PureState, src: str, out_t: str, out_r: str, t: float) -> PureState:
    """a^dagger_{src,P} -> sqrt(t) a^dagger_{out_t,P} + sqrt(1-t) a^dagger_{out_r,P} for P in (H, V)."""
    return vbs(src, out_t, out_r, t).apply(state)


def bs50_apply(state: PureState, in1: str, in2: str, out1: str, out2: str) -> PureState:
    return bs50(in1, in2, out1, out2).apply(state)


def pbs_apply(state: PureState, src: str, out_h: str, out_v: str) -> PureState:
    """Transmit H into ``out_h``, reflect V into ``out_v``."""
    return pbs(src, out_h, out_v).apply(state)


def pol_phase_flip(state: PureState, spatial: str, axis: Polarization) -> PureState:
    """Multiply each term by (-1)^(photons in the ``axis`` slot of ``spatial``)."""
    return polarization_flip(spatial, axis).apply(state)


def mode_phase(state: PureState, spatial: str, phase: float) -> PureState:
    """Multiply each term by exp(i * phase * photons in ``spatial``)."""
    return phase_shift(spatial, phase).apply(state)


def apply_all(state: PureState, elements: Iterable[OpticalElement]) -> PureState:
    """Apply elements in order."""
    return reduce(lambda s, element: element.apply(s), elements, state)
