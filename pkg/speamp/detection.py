from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Optional

from speamp.fock import EnsembleState, PureState, normalize, restrict
from speamp.models import DetectionPattern, H, ModeId, PostSelectionError, RegistryError, V

logger = logging.getLogger(__name__)

# Pairs that herald success on one side: one H-slot detector (D1, D3) and one V-slot detector (D2, D4).
SUCCESS_PAIRS = (("D1", "D2"), ("D1", "D4"), ("D2", "D3"), ("D3", "D4"))
HERALDED_MODES = ("c3", "d3")


@dataclass(frozen=True)
class DetectorMap:
    """Photon-number-resolving detectors and the mode slot each one watches."""

    assignments: tuple[tuple[str, ModeId], ...]

    def __post_init__(self):
        labels = [d for d, _ in self.assignments]
        slots = [m for _, m in self.assignments]
        if len(set(labels)) != len(labels) or len(set(slots)) != len(slots):
            raise RegistryError(f"detector map is not bijective: {self.assignments}")

    @staticmethod
    def standard() -> DetectorMap:
        """Wiring behind the PBSs: D1 on a4 (H), D2 on a5 (V), D3 on a6 (H), D4 on a7 (V); same for Bob."""
        assignments = []
        for side in ("a", "b"):
            assignments += [
                (f"D1{side}", H(f"{side}4")),
                (f"D2{side}", V(f"{side}5")),
                (f"D3{side}", H(f"{side}6")),
                (f"D4{side}", V(f"{side}7")),
            ]
        return DetectorMap(assignments=tuple(assignments))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(d for d, _ in self.assignments)

    def slot(self, detector: str) -> ModeId:
        for label, mode in self.assignments:
            if label == detector:
                return mode
        raise RegistryError(f"detector {detector!r} is not mapped")


@dataclass(frozen=True)
class OutcomeRecord:
    """Probability of one heralding pattern and the normalized state left in the heralded modes."""

    pattern: DetectionPattern
    probability: float
    collapsed: Optional[PureState]  # None when probability == 0


def enumerate_success_patterns() -> list[DetectionPattern]:
    """The sixteen heralding patterns: every Alice success pair combined with every Bob success pair."""
    return [
        DetectionPattern.of(f"{a1}a", f"{a2}a", f"{b1}b", f"{b2}b")
        for (a1, a2), (b1, b2) in product(SUCCESS_PAIRS, SUCCESS_PAIRS)
    ]


def _required_counts(state: PureState, pattern: DetectionPattern, detector_map: DetectorMap) -> dict[int, int]:
    for d in pattern.clicked:
        if d not in detector_map.labels:
            raise RegistryError(f"pattern {pattern} uses unmapped detector {d!r}")
    registry = state.registry
    return {registry.index(mode): int(label in pattern.clicked) for label, mode in detector_map.assignments}


def project(
    state: PureState,
    pattern: DetectionPattern,
    detector_map: DetectorMap,
    keep: Iterable[str] = HERALDED_MODES,
) -> OutcomeRecord:
    """Post-select ``state`` on ``pattern``: one photon in each clicked slot, none in other detector slots.

    The surviving terms are re-expressed over the ``keep`` modes and renormalized.
    """
    required = _required_counts(state, pattern, detector_map)
    kept_terms = {}
    probability = 0.0
    for ket, amp in state.terms.items():
        if all(ket[i] == n for i, n in required.items()):
            kept_terms[ket] = amp
            probability += abs(amp) ** 2
    logger.debug(f"{pattern}: p={probability:.6g} from {len(kept_terms)} of {len(state)} terms")

    if probability == 0.0:
        return OutcomeRecord(pattern=pattern, probability=0.0, collapsed=None)

    # detector slots are fixed by the pattern, so they can be zeroed before restricting
    zeroed = {tuple(0 if i in required else n for i, n in enumerate(ket)): amp for ket, amp in kept_terms.items()}
    residual = PureState.from_terms(state.registry, zeroed)
    collapsed = normalize(restrict(residual, keep))
    return OutcomeRecord(pattern=pattern, probability=probability, collapsed=collapsed)


def project_ensemble(
    ensemble: EnsembleState,
    pattern: DetectionPattern,
    detector_map: DetectorMap,
    keep: Iterable[str] = HERALDED_MODES,
) -> tuple[float, EnsembleState]:
    """Post-select every branch; return the total probability and the Bayes-updated posterior."""
    keep = tuple(keep)
    probability = 0.0
    posterior = []
    for weight, state in ensemble.branches:
        record = project(state, pattern, detector_map, keep)
        probability += weight * record.probability
        if record.collapsed is not None:
            posterior.append((weight * record.probability, record.collapsed))
    if probability == 0.0:
        raise PostSelectionError(f"pattern {pattern} has zero probability on every branch")
    return probability, EnsembleState.mixture(posterior)


def outcome_distribution(state: PureState, detector_map: DetectorMap) -> dict[tuple[int, ...], float]:
    """Probability of every detector count vector (ordered as ``detector_map.labels``), success or failure."""
    slots = [state.registry.index(mode) for _, mode in detector_map.assignments]
    dist: dict[tuple[int, ...], float] = defaultdict(float)
    for ket, amp in state.terms.items():
        dist[tuple(ket[i] for i in slots)] += abs(amp) ** 2
    return dict(dist)


def failure_probability(state: PureState, detector_map: DetectorMap) -> float:
    """Everything outside the sixteen heralding patterns, aggregated."""
    success = sum(project(state, p, detector_map).probability for p in enumerate_success_patterns())
    return 1.0 - success
