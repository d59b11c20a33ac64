"""End-to-end simulation of the amplification and concentration circuit.

Alice holds input mode a1 and ancilla source c1; Bob holds b1 and d1. Each side sends an H and
a V ancilla photon through a VBS (c1 -> c2/c3 with t1, d1 -> d2/d3 with t2), mixes the input mode
with the transmitted ancilla mode on a 50:50 beam splitter and splits both outputs on PBSs in
front of four detectors. A herald leaves the surviving photon (if any) in c3 or d3.

The single-photon branch and the vacuum branch of the input never interfere, so they are
simulated separately (``simulate``) and combined with the input fidelity afterwards
(``aggregate``).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cache
from typing import Iterable, Optional

from speamp.config import COMPARE_TOLERANCE
from speamp.detection import (
    HERALDED_MODES,
    DetectorMap,
    OutcomeRecord,
    enumerate_success_patterns,
    project,
)
from speamp.elements import (
    OpticalElement,
    apply_all,
    bs50,
    pbs,
    phase_shift,
    polarization_flip,
    vbs,
)
from speamp.fock import (
    EnsembleState,
    ModeRegistry,
    PureState,
    add,
    create_photon,
    fidelity,
    fock_state,
    normalize,
    register_modes,
    tensor,
    vacuum,
)
from speamp.models import (
    CorrectionSearchError,
    DegenerateParameterError,
    DetectionPattern,
    H,
    Polarization,
    ProtocolParams,
    V,
    check_polarization,
    check_unit,
)

logger = logging.getLogger(__name__)

INPUT_MODES = ("a1", "b1")
ANCILLA_MODES = ("c1", "c2", "c3", "d1", "d2", "d3")
ROUTING_MODES = tuple(f"{side}{i}" for side in "ab" for i in range(2, 8))
PROTOCOL_MODES = INPUT_MODES + ANCILLA_MODES + ROUTING_MODES

# Input/ancilla mixing on the beam splitters, then the four PBSs in front of the detectors.
PIPELINE: tuple[OpticalElement, ...] = (
    bs50("a1", "c2", "a2", "a3"),
    bs50("b1", "d2", "b2", "b3"),
    pbs("a2", "a4", "a5"),
    pbs("a3", "a6", "a7"),
    pbs("b2", "b4", "b5"),
    pbs("b3", "b6", "b7"),
)


# --- Inputs ---


def t2_matched(t1: float, a: float) -> float:
    """VBS2 transmission that balances the heralded output: t2 = t1 (1 - a^2) / (a^2 - 2 a^2 t1 + t1)."""
    check_unit("t1", t1)
    check_unit("a", a)
    if a in (0.0, 1.0):
        raise DegenerateParameterError(f"no matched t2 exists for a = {a}; pass t2 explicitly")
    a2 = a * a
    return t1 * (1.0 - a2) / (a2 - 2.0 * a2 * t1 + t1)


def resolve_t2(params: ProtocolParams) -> float:
    return t2_matched(params.t1, params.a) if params.t2 is None else params.t2


def polarized(mode: str, alpha: float, beta: float, registry: ModeRegistry) -> PureState:
    """alpha |H> + beta |V> in ``mode``."""
    return add(fock_state(registry, [H(mode)], alpha), fock_state(registry, [V(mode)], beta))


def signal_state(a: float, alpha: float, beta: float) -> PureState:
    """a (alpha|H> + beta|V>)_a1 |0>_b1 + b |0>_a1 (alpha|H> + beta|V>)_b1."""
    registry = register_modes(INPUT_MODES)
    b = math.sqrt(max(0.0, 1.0 - a * a))
    left = polarized("a1", a * alpha, a * beta, registry)
    right = polarized("b1", b * alpha, b * beta, registry)
    return add(left, right)


def build_input(eta: float, a: float, alpha: float, beta: float) -> EnsembleState:
    """The lossy input: signal state with weight eta, vacuum with weight 1 - eta."""
    check_unit("eta", eta)
    check_unit("a", a)
    check_polarization(alpha, beta)
    signal = signal_state(a, alpha, beta)
    return EnsembleState.mixture([(eta, signal), (1.0 - eta, vacuum(register_modes(INPUT_MODES)))])


def prepare_ancilla(t1: float, t2: float) -> PureState:
    """Two H/V photon pairs in c1 and d1, each pair split on its VBS."""
    check_unit("t1", t1)
    check_unit("t2", t2)
    state = vacuum(register_modes(ANCILLA_MODES))
    for mode in (H("c1"), V("c1"), H("d1"), V("d1")):
        state = create_photon(state, mode)
    return apply_all(state, (vbs("c1", "c2", "c3", t1), vbs("d1", "d2", "d3", t2)))


def evolve(input_state: PureState, ancilla: PureState) -> PureState:
    """Joint input + ancilla state after the beam splitters and PBSs."""
    joint = tensor(tensor(input_state, ancilla), vacuum(register_modes(ROUTING_MODES)))
    return apply_all(joint, PIPELINE)


def heralded_target(params: ProtocolParams) -> PureState:
    """Normalized heralded signal state after correction, on (c3, d3).

    Spatial amplitudes a t2 sqrt(t1(1-t1)) on c3 and b t1 sqrt(t2(1-t2)) on d3, each carrying the
    input polarization; equal amplitudes (maximal entanglement) when t2 is matched.
    """
    t1, t2 = params.t1, resolve_t2(params)
    registry = register_modes(HERALDED_MODES)
    amp_c = params.a * t2 * math.sqrt(t1 * (1.0 - t1))
    amp_d = params.b * t1 * math.sqrt(t2 * (1.0 - t2))
    return normalize(
        add(
            polarized("c3", amp_c * params.alpha, amp_c * params.beta, registry),
            polarized("d3", amp_d * params.alpha, amp_d * params.beta, registry),
        )
    )


# --- Simulation ---


@dataclass(frozen=True)
class BranchSimulation:
    """Heralding statistics of the single-photon and vacuum input branches, independent of eta."""

    params: ProtocolParams
    t2: float
    signal_evolved: PureState
    vacuum_evolved: PureState
    signal: tuple[OutcomeRecord, ...]
    vacuum: tuple[OutcomeRecord, ...]

    @property
    def p1(self) -> float:
        return sum(r.probability for r in self.signal)

    @property
    def p2(self) -> float:
        return sum(r.probability for r in self.vacuum)


def simulate(params: ProtocolParams, detector_map: Optional[DetectorMap] = None) -> BranchSimulation:
    detector_map = detector_map or DetectorMap.standard()
    t2 = resolve_t2(params)
    ancilla = prepare_ancilla(params.t1, t2)
    signal_evolved = evolve(signal_state(params.a, params.alpha, params.beta), ancilla)
    vacuum_evolved = evolve(vacuum(register_modes(INPUT_MODES)), ancilla)

    patterns = enumerate_success_patterns()
    signal = tuple(project(signal_evolved, p, detector_map) for p in patterns)
    vacuum_records = tuple(project(vacuum_evolved, p, detector_map) for p in patterns)
    logger.debug(
        f"simulated a2={params.a2:.6g} t1={params.t1:.6g} t2={t2:.6g}: "
        f"{len(signal_evolved)} signal terms, {len(vacuum_evolved)} vacuum terms"
    )
    return BranchSimulation(
        params=params,
        t2=t2,
        signal_evolved=signal_evolved,
        vacuum_evolved=vacuum_evolved,
        signal=signal,
        vacuum=vacuum_records,
    )


# --- Corrections ---


@dataclass(frozen=True)
class CorrectionTable:
    """Per-pattern local phase corrections applied to the heralded (c3, d3) state."""

    entries: tuple[tuple[DetectionPattern, tuple[OpticalElement, ...]], ...]

    def correction_for(self, pattern: DetectionPattern) -> tuple[OpticalElement, ...]:
        for p, ops in self.entries:
            if p == pattern:
                return ops
        raise KeyError(f"no correction for pattern {pattern}")

    def apply(self, pattern: DetectionPattern, state: PureState) -> PureState:
        return apply_all(state, self.correction_for(pattern))

    def describe(self) -> list[tuple[str, str]]:
        return [(p.label, " + ".join(map(str, ops)) or "identity") for p, ops in self.entries]


def candidate_corrections() -> list[tuple[OpticalElement, ...]]:
    """Every composition of an optional flip on c3, an optional flip on d3 and an optional pi phase on d3.

    Shorter compositions come first.
    """
    axes = (None, Polarization.H, Polarization.V)
    candidates = []
    for c3_axis in axes:
        for d3_axis in axes:
            for with_phase in (False, True):
                ops = []
                if c3_axis is not None:
                    ops.append(polarization_flip("c3", c3_axis))
                if d3_axis is not None:
                    ops.append(polarization_flip("d3", d3_axis))
                if with_phase:
                    ops.append(phase_shift("d3", math.pi))
                candidates.append(tuple(ops))
    return sorted(candidates, key=len)


REFERENCE_PARAMS = ProtocolParams.from_a2(eta=1.0, a2=0.3, t1=0.2, alpha=0.6)
CHECK_PARAMS = (
    ProtocolParams(eta=1.0, a=math.sqrt(0.5), t1=0.25, alpha=math.sqrt(0.5), beta=-math.sqrt(0.5)),
    ProtocolParams.from_a2(eta=1.0, a2=0.8, t1=0.4, alpha=0.8),
    ProtocolParams.from_a2(eta=1.0, a2=0.6, t1=0.35, alpha=1.0, t2=0.3),
    ProtocolParams.from_a2(eta=1.0, a2=0.2, t1=0.1, alpha=0.0),
)


def _corrects(record: OutcomeRecord, ops: Iterable[OpticalElement], target: PureState, tolerance: float) -> bool:
    if record.collapsed is None:
        return False
    return abs(fidelity(apply_all(record.collapsed, ops), target) - 1.0) <= tolerance


def derive_correction_table(
    reference: ProtocolParams = REFERENCE_PARAMS,
    checks: Iterable[ProtocolParams] = CHECK_PARAMS,
    tolerance: float = COMPARE_TOLERANCE,
) -> CorrectionTable:
    """Search, for each heralding pattern, the shortest candidate correction reaching fidelity 1.

    The search runs at ``reference`` and every choice is verified at each of ``checks``; a
    pattern without a valid composition means an element convention is broken.
    """
    sims = [simulate(reference)] + [simulate(p) for p in checks]
    targets = [heralded_target(sim.params) for sim in sims]
    candidates = candidate_corrections()

    entries = []
    for i, pattern in enumerate(enumerate_success_patterns()):
        chosen = next((ops for ops in candidates if _corrects(sims[0].signal[i], ops, targets[0], tolerance)), None)
        if chosen is None:
            raise CorrectionSearchError(f"no correction reaches fidelity 1 for pattern {pattern}")
        for sim, target in zip(sims[1:], targets[1:]):
            if not _corrects(sim.signal[i], chosen, target, tolerance):
                raise CorrectionSearchError(
                    f"correction for {pattern} fails at a2={sim.params.a2:.6g} t1={sim.params.t1:.6g} "
                    f"alpha={sim.params.alpha:.6g} beta={sim.params.beta:.6g}"
                )
        logger.debug(f"correction {pattern}: {' + '.join(map(str, chosen)) or 'identity'}")
        entries.append((pattern, chosen))
    return CorrectionTable(entries=tuple(entries))


@cache
def default_correction_table() -> CorrectionTable:
    """The derived table, computed once per process and shared read-only."""
    return derive_correction_table()


# --- Aggregation ---


@dataclass(frozen=True)
class PatternOutcome:
    """One heralding pattern: its probability under the lossy input and the corrected posterior."""

    pattern: DetectionPattern
    probability: float
    state: Optional[EnsembleState]
    signal_probability: float
    vacuum_probability: float
    signal_state: Optional[PureState]


@dataclass(frozen=True)
class ProtocolOutcome:
    params: ProtocolParams
    t2: float
    per_pattern: tuple[PatternOutcome, ...]
    p1: float
    p2: float
    p_total: float
    eta_out: Optional[float]  # None when p_total == 0
    gain: Optional[float]  # None when eta == 0 or p_total == 0
    output_state: Optional[EnsembleState]
    signal_state: Optional[PureState]  # corrected heralded state of the single-photon branch


def aggregate(sim: BranchSimulation, eta: float, table: Optional[CorrectionTable] = None) -> ProtocolOutcome:
    """Combine the branch simulation with input fidelity ``eta``.

    Each pattern's posterior is the Bayes update of the two input branches; the output state is
    the pattern-averaged mixture of the corrected signal state and the (c3, d3) vacuum.
    """
    check_unit("eta", eta)
    table = table or default_correction_table()
    p1, p2 = sim.p1, sim.p2
    p_total = eta * p1 + (1.0 - eta) * p2

    per_pattern = []
    signal_out = None
    for rec_s, rec_v in zip(sim.signal, sim.vacuum):
        pattern = rec_s.pattern
        corrected = table.apply(pattern, rec_s.collapsed) if rec_s.collapsed is not None else None
        if signal_out is None:
            signal_out = corrected
        weighted = [(eta * rec_s.probability, corrected), ((1.0 - eta) * rec_v.probability, rec_v.collapsed)]
        probability = sum(w for w, _ in weighted)
        posterior = EnsembleState.mixture((w, s) for w, s in weighted if s is not None) if probability > 0.0 else None
        per_pattern.append(
            PatternOutcome(
                pattern=pattern,
                probability=probability,
                state=posterior,
                signal_probability=rec_s.probability,
                vacuum_probability=rec_v.probability,
                signal_state=corrected,
            )
        )

    if p_total <= 0.0:
        logger.warning(f"no heralding pattern fires at a2={sim.params.a2:.6g} t1={sim.params.t1:.6g} t2={sim.t2:.6g}")
        eta_out = gain = output_state = None
    else:
        eta_out = eta * p1 / p_total
        gain = eta_out / eta if eta > 0.0 else None
        branches = [((1.0 - eta) * p2, vacuum(register_modes(HERALDED_MODES)))]
        if signal_out is not None:
            branches.insert(0, (eta * p1, signal_out))
        output_state = EnsembleState.mixture(branches)

    return ProtocolOutcome(
        params=sim.params,
        t2=sim.t2,
        per_pattern=tuple(per_pattern),
        p1=p1,
        p2=p2,
        p_total=p_total,
        eta_out=eta_out,
        gain=gain,
        output_state=output_state,
        signal_state=signal_out,
    )


def run(params: ProtocolParams, table: Optional[CorrectionTable] = None) -> ProtocolOutcome:
    """Simulate the full circuit for ``params`` and aggregate over all sixteen heralding patterns."""
    return aggregate(simulate(params), params.eta, table)
