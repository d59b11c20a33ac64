"""Sparse multi-photon states over named optical modes.

A state is a map from occupation vectors (one count per registered slot) to complex
amplitudes. Every spatial label owns two slots, H then V, and labels are ordered
lexicographically, so equal kets compare equal as tuples. States are immutable; all
operations return new objects.

The protocol never carries more than five photons (one signal photon plus four ancillas),
so the sparse map stays at a few thousand terms at most.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from speamp.config import COMPARE_TOLERANCE, PRUNE_TOLERANCE, WEIGHT_TOLERANCE
from speamp.models import ModeId, Polarization, PostSelectionError, RegistryError

Ket = tuple[int, ...]


@dataclass(frozen=True)
class ModeRegistry:
    """Canonically ordered set of spatial labels and their (H, V) slots."""

    labels: tuple[str, ...]
    _index: dict[ModeId, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index = {}
        for i, label in enumerate(self.labels):
            index[ModeId(label, Polarization.H)] = 2 * i
            index[ModeId(label, Polarization.V)] = 2 * i + 1
        object.__setattr__(self, "_index", index)

    @property
    def slots(self) -> tuple[ModeId, ...]:
        return tuple(sorted(self._index, key=self._index.__getitem__))

    @property
    def size(self) -> int:
        return 2 * len(self.labels)

    def index(self, mode: ModeId) -> int:
        try:
            return self._index[mode]
        except KeyError:
            raise RegistryError(f"mode {mode} is not registered (labels: {', '.join(self.labels)})") from None

    def __contains__(self, item) -> bool:
        if isinstance(item, ModeId):
            return item in self._index
        return item in self.labels


def register_modes(labels: Iterable[str]) -> ModeRegistry:
    """Create a registry exposing an H and a V slot for every spatial label."""
    labels = list(labels)
    seen = set()
    for label in labels:
        if label in seen:
            raise RegistryError(f"duplicate spatial label {label!r}")
        seen.add(label)
    return ModeRegistry(labels=tuple(sorted(labels)))


@dataclass(frozen=True)
class PureState:
    """Sparse ket: occupation vector -> complex amplitude, over one registry."""

    registry: ModeRegistry
    terms: Mapping[Ket, complex]

    @staticmethod
    def from_terms(registry: ModeRegistry, terms: Mapping[Ket, complex]) -> PureState:
        """Build a state, dropping amplitudes below the prune tolerance."""
        kept = {}
        for ket, amp in terms.items():
            if len(ket) != registry.size:
                raise RegistryError(f"ket {ket} has {len(ket)} slots, registry has {registry.size}")
            if any(n < 0 for n in ket):
                raise ValueError(f"negative occupation in ket {ket}")
            if abs(amp) >= PRUNE_TOLERANCE:
                kept[ket] = complex(amp)
        return PureState(registry=registry, terms=kept)

    def amplitude(self, ket: Ket) -> complex:
        return self.terms.get(ket, 0j)

    def count(self, ket: Ket, mode: ModeId) -> int:
        return ket[self.registry.index(mode)]

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __len__(self) -> int:
        return len(self.terms)


@dataclass(frozen=True)
class EnsembleState:
    """Mixed state as a convex combination of normalized pure states."""

    branches: tuple[tuple[float, PureState], ...]

    def __post_init__(self):
        if not self.branches:
            raise ValueError("ensemble needs at least one branch")
        total = 0.0
        for weight, state in self.branches:
            if weight < 0:
                raise ValueError(f"negative branch weight {weight}")
            if abs(norm(state) - 1.0) > COMPARE_TOLERANCE:
                raise ValueError(f"branch state is not normalized (norm {norm(state)!r})")
            total += weight
        if abs(total - 1.0) > WEIGHT_TOLERANCE:
            raise ValueError(f"branch weights sum to {total!r}, expected 1")

    @staticmethod
    def pure(state: PureState) -> EnsembleState:
        return EnsembleState(branches=((1.0, state),))

    @staticmethod
    def mixture(branches: Iterable[tuple[float, PureState]]) -> EnsembleState:
        """Renormalize non-negative weights and drop zero-weight branches."""
        branches = [(w, s) for w, s in branches if w > 0]
        total = sum(w for w, _ in branches)
        if total <= 0:
            raise PostSelectionError("all ensemble branches have zero weight")
        return EnsembleState(branches=tuple((w / total, s) for w, s in branches))

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(w for w, _ in self.branches)

    @property
    def states(self) -> tuple[PureState, ...]:
        return tuple(s for _, s in self.branches)


# --- Construction ---


def vacuum(registry: ModeRegistry) -> PureState:
    return PureState(registry=registry, terms={(0,) * registry.size: 1 + 0j})


def create_photon(state: PureState, mode: ModeId) -> PureState:
    """Apply the creation operator of ``mode``: a^dagger |n> = sqrt(n+1) |n+1>. Not normalized."""
    i = state.registry.index(mode)
    out = {}
    for ket, amp in state.terms.items():
        n = ket[i]
        out[ket[:i] + (n + 1,) + ket[i + 1 :]] = amp * math.sqrt(n + 1)
    return PureState.from_terms(state.registry, out)


def fock_state(registry: ModeRegistry, modes: Iterable[ModeId], amplitude: complex = 1.0) -> PureState:
    """``amplitude`` times the normalized Fock state with one photon per listed mode (repeats allowed)."""
    ket = [0] * registry.size
    for mode in modes:
        ket[registry.index(mode)] += 1
    return PureState.from_terms(registry, {tuple(ket): amplitude})


def scale(state: PureState, factor: complex) -> PureState:
    return PureState.from_terms(state.registry, {k: a * factor for k, a in state.terms.items()})


def add(*states: PureState) -> PureState:
    """Superpose states defined on the same registry."""
    registry = _same_registry(*states)
    out: dict[Ket, complex] = defaultdict(complex)
    for s in states:
        for ket, amp in s.terms.items():
            out[ket] += amp
    return PureState.from_terms(registry, out)


def tensor(s1: PureState, s2: PureState) -> PureState:
    """Product state over the merged (canonically reordered) registry."""
    overlap = set(s1.registry.labels) & set(s2.registry.labels)
    if overlap:
        raise RegistryError(f"cannot tensor states sharing modes {sorted(overlap)}")
    registry = register_modes(s1.registry.labels + s2.registry.labels)
    place1 = [registry.index(m) for m in s1.registry.slots]
    place2 = [registry.index(m) for m in s2.registry.slots]

    out = {}
    for k1, a1 in s1.terms.items():
        for k2, a2 in s2.terms.items():
            ket = [0] * registry.size
            for pos, n in zip(place1, k1):
                ket[pos] = n
            for pos, n in zip(place2, k2):
                ket[pos] = n
            out[tuple(ket)] = a1 * a2
    return PureState.from_terms(registry, out)


# --- Inner products ---


def _same_registry(*states: PureState) -> ModeRegistry:
    registry = states[0].registry
    for s in states[1:]:
        if s.registry.labels != registry.labels:
            raise RegistryError(f"registry mismatch: {registry.labels} vs {s.registry.labels}")
    return registry


def inner(s1: PureState, s2: PureState) -> complex:
    """Hermitian inner product <s1|s2>."""
    _same_registry(s1, s2)
    if len(s1.terms) > len(s2.terms):
        return sum((a.conjugate() * s2.terms[k] for k, a in s1.terms.items() if k in s2.terms), 0j)
    return sum((s1.terms[k].conjugate() * a for k, a in s2.terms.items() if k in s1.terms), 0j)


def norm(state: PureState) -> float:
    return math.sqrt(sum(abs(a) ** 2 for a in state.terms.values()))


def normalize(state: PureState) -> PureState:
    n = norm(state)
    if n == 0.0:
        raise ValueError("cannot normalize the zero state")
    return scale(state, 1.0 / n)


def fidelity(s1: PureState, s2: PureState) -> float:
    """|<s1|s2>|^2 for normalized states; insensitive to global phase."""
    return abs(inner(s1, s2)) ** 2


def photon_number(state: PureState) -> int:
    """Total photon number shared by all terms."""
    numbers = {sum(ket) for ket in state.terms}
    if len(numbers) != 1:
        raise ValueError(f"state has no definite photon number: {sorted(numbers)}")
    return numbers.pop()


def restrict(state: PureState, labels: Iterable[str]) -> PureState:
    """Re-express ``state`` over the registry of ``labels`` only.

    Every term must be empty outside ``labels``; the map from kets to restricted kets is then injective.
    """
    registry = register_modes(labels)
    source = state.registry
    positions = [source.index(m) for m in registry.slots]
    kept = set(positions)
    out = {}
    for ket, amp in state.terms.items():
        if any(n for i, n in enumerate(ket) if i not in kept):
            raise RegistryError(f"term {ket} has photons outside modes {registry.labels}")
        out[tuple(ket[i] for i in positions)] = amp
    return PureState.from_terms(registry, out)


# --- Debug serialization ---


def dumps(state: PureState) -> str:
    """One line per term, ``<count-vector> <re> <im>``, in canonical ket order."""
    lines = []
    for ket in sorted(state.terms):
        amp = state.terms[ket]
        lines.append(f"{','.join(map(str, ket))} {amp.real!r} {amp.imag!r}")
    return "\n".join(lines) + "\n"


def loads(text: str, registry: ModeRegistry) -> PureState:
    terms = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        counts, re, im = line.split()
        terms[tuple(int(n) for n in counts.split(","))] = complex(float(re), float(im))
    return PureState.from_terms(registry, terms)
