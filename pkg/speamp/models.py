from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from speamp.config import COEFFICIENT_TOLERANCE

# --- Errors ---


class SpeampError(ValueError):
    """Base class for all errors raised by the package."""


class ParameterError(SpeampError):
    """A parameter lies outside its legal domain."""


class DegenerateParameterError(SpeampError):
    """The parameters are legal but a derived quantity is undefined (a in {0, 1}, gain at eta=0)."""


class RegistryError(SpeampError):
    """Duplicate, unregistered or overlapping optical modes."""


class PostSelectionError(SpeampError):
    """A heralding event has zero probability where a posterior state is required."""


class CorrectionSearchError(SpeampError):
    """No allowed correction composition maps a heralded state onto its target."""


# --- Modes ---


class Polarization(Enum):
    H = "H"
    V = "V"


@dataclass(frozen=True)
class ModeId:
    """One occupation slot: a spatial mode label plus a polarization."""

    spatial: str
    polarization: Polarization

    @property
    def sort_key(self) -> tuple[str, int]:
        # H before V within a spatial label
        return (self.spatial, 0 if self.polarization is Polarization.H else 1)

    def __str__(self) -> str:
        return f"{self.spatial}{self.polarization.value}"


def H(spatial: str) -> ModeId:
    return ModeId(spatial, Polarization.H)


def V(spatial: str) -> ModeId:
    return ModeId(spatial, Polarization.V)


# --- Detection ---


@dataclass(frozen=True)
class DetectionPattern:
    """Detectors that must each register exactly one photon; every other detector must stay dark."""

    clicked: frozenset[str]

    @staticmethod
    def of(*labels: str) -> DetectionPattern:
        return DetectionPattern(clicked=frozenset(labels))

    @property
    def label(self) -> str:
        """Canonical name, e.g. ``D1aD2aD1bD2b`` (Alice's detectors first)."""
        return "".join(sorted(self.clicked, key=lambda d: (d[-1], d)))

    def __str__(self) -> str:
        return self.label


# --- Protocol parameters ---


def check_unit(name: str, value: float, *, open_interval: bool = False) -> None:
    """Raise ParameterError unless ``value`` lies in [0, 1] (or (0, 1) with ``open_interval``)."""
    if not math.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {value}")
    if open_interval and not 0.0 < value < 1.0:
        raise ParameterError(f"{name} must lie in (0, 1), got {value}")
    if not 0.0 <= value <= 1.0:
        raise ParameterError(f"{name} must lie in [0, 1], got {value}")


def check_polarization(alpha: float, beta: float) -> None:
    if not (math.isfinite(alpha) and math.isfinite(beta)):
        raise ParameterError(f"alpha, beta must be finite, got ({alpha}, {beta})")
    if abs(alpha**2 + beta**2 - 1.0) > COEFFICIENT_TOLERANCE:
        raise ParameterError(f"alpha^2 + beta^2 must equal 1, got {alpha**2 + beta**2!r}")


@dataclass(frozen=True)
class ProtocolParams:
    """Inputs of one protocol run.

    eta:    initial fidelity (weight of the single-photon branch against vacuum)
    a:      entanglement coefficient on Alice's side, b = sqrt(1 - a^2)
    alpha, beta: polarization amplitudes of the single-photon qubit
    t1, t2: transmissions of VBS1 and VBS2; t2=None means matched (t2_matched)
    """

    eta: float
    a: float
    t1: float
    alpha: float = 1.0
    beta: float = 0.0
    t2: Optional[float] = None

    def __post_init__(self):
        check_unit("eta", self.eta)
        check_unit("a", self.a)
        check_unit("t1", self.t1)
        if self.t2 is not None:
            check_unit("t2", self.t2)
        check_polarization(self.alpha, self.beta)

    @staticmethod
    def from_a2(eta: float, a2: float, t1: float, alpha: float = 1.0, t2: Optional[float] = None) -> ProtocolParams:
        """Build params from a^2 and alpha; beta is the non-negative root of 1 - alpha^2."""
        check_unit("a2", a2)
        if not -1.0 <= alpha <= 1.0:
            raise ParameterError(f"alpha must lie in [-1, 1], got {alpha}")
        return ProtocolParams(
            eta=eta, a=math.sqrt(a2), t1=t1, alpha=alpha, beta=math.sqrt(max(0.0, 1.0 - alpha * alpha)), t2=t2
        )

    @property
    def a2(self) -> float:
        return self.a * self.a

    @property
    def b(self) -> float:
        return math.sqrt(max(0.0, 1.0 - self.a2))

    @property
    def is_matched(self) -> bool:
        return self.t2 is None


# --- Closed-form results ---


@dataclass(frozen=True)
class ClosedFormReport:
    """Closed-form metrics for one parameter point. ``gain``/``g_limit`` are None at eta=0."""

    p1: float
    p2: float
    p_total: float
    eta_out: Optional[float]
    gain: Optional[float]
    t1_threshold: float
    g_limit: Optional[float]
    t2: float
    near_boundary: bool = False


# --- Sweeps ---

SWEEP_VARIABLES = ("t1", "a2", "eta")


@dataclass(frozen=True)
class SweepSpec:
    """One-dimensional sweep over ``variable`` with the remaining parameters fixed."""

    variable: str
    start: float
    stop: float
    steps: int

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ParameterError(f"sweep variable must be one of {SWEEP_VARIABLES}, got {self.variable!r}")
        if self.steps < 2:
            raise ParameterError(f"sweep needs at least 2 steps, got {self.steps}")
        if not self.start < self.stop:
            raise ParameterError(f"sweep start must be below stop, got {self.start} >= {self.stop}")
        # eta may touch the closed ends; t1 and a2 must stay off them
        open_interval = self.variable != "eta"
        check_unit(f"{self.variable} start", self.start, open_interval=open_interval)
        check_unit(f"{self.variable} stop", self.stop, open_interval=open_interval)
