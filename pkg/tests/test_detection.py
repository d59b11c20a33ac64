import pytest

from speamp.detection import (
    DetectorMap,
    enumerate_success_patterns,
    failure_probability,
    outcome_distribution,
    project,
    project_ensemble,
)
from speamp.fock import EnsembleState, PureState, fidelity, fock_state, register_modes, scale, vacuum
from speamp.models import DetectionPattern, H, PostSelectionError, RegistryError, V
from speamp.protocol import PROTOCOL_MODES, evolve, prepare_ancilla, signal_state


def per_pattern_signal(a2, t1, t2):
    return (a2 * t1 * t2**2 * (1 - t1) + (1 - a2) * t1**2 * t2 * (1 - t2)) / 16


@pytest.fixture(scope="module")
def standard_map():
    return DetectorMap.standard()


class TestDetectorMap:
    def test_standard_wiring(self, standard_map):
        assert standard_map.slot("D1a") == H("a4")
        assert standard_map.slot("D2a") == V("a5")
        assert standard_map.slot("D3b") == H("b6")
        assert standard_map.slot("D4b") == V("b7")
        assert len(standard_map.labels) == 8

    def test_not_bijective(self):
        with pytest.raises(RegistryError):
            DetectorMap(assignments=(("D1a", H("a4")), ("D2a", H("a4"))))

    def test_unknown_detector(self, standard_map):
        with pytest.raises(RegistryError):
            standard_map.slot("D5a")


class TestPatterns:
    def test_sixteen(self):
        patterns = enumerate_success_patterns()
        assert len(patterns) == 16
        assert len(set(patterns)) == 16

    def test_contains_worked_patterns(self):
        patterns = enumerate_success_patterns()
        assert DetectionPattern.of("D1a", "D2a", "D1b", "D2b") in patterns
        assert DetectionPattern.of("D3a", "D4a", "D3b", "D4b") in patterns

    def test_one_h_and_one_v_detector_per_side(self):
        h_slot = {"D1", "D3"}
        for pattern in enumerate_success_patterns():
            for side in "ab":
                mine = [d[:2] for d in pattern.clicked if d.endswith(side)]
                assert len(mine) == 2
                assert len(h_slot & set(mine)) == 1

    def test_canonical_label(self):
        assert enumerate_success_patterns()[0].label == "D1aD2aD1bD2b"
        assert enumerate_success_patterns()[-1].label == "D3aD4aD3bD4b"


class TestProject:
    @pytest.fixture(scope="class")
    def evolved(self):
        a2, t1, t2 = 0.3, 0.2, 0.45
        ancilla = prepare_ancilla(t1, t2)
        signal = evolve(signal_state(a2**0.5, 0.6, 0.8), ancilla)
        vac = evolve(vacuum(register_modes(["a1", "b1"])), ancilla)
        return (a2, t1, t2), signal, vac

    def test_signal_branch_probability(self, evolved, standard_map):
        (a2, t1, t2), signal, _ = evolved
        record = project(signal, DetectionPattern.of("D1a", "D2a", "D1b", "D2b"), standard_map)
        assert record.probability == pytest.approx(per_pattern_signal(a2, t1, t2), abs=1e-14)
        assert record.collapsed.registry.labels == ("c3", "d3")

    def test_signal_branch_uniform(self, evolved, standard_map):
        _, signal, _ = evolved
        probs = [project(signal, p, standard_map).probability for p in enumerate_success_patterns()]
        assert max(probs) - min(probs) <= 1e-14

    def test_vacuum_branch(self, evolved, standard_map):
        (_, t1, t2), _, vac = evolved
        heralded_vacuum = vacuum(register_modes(["c3", "d3"]))
        for pattern in enumerate_success_patterns():
            record = project(vac, pattern, standard_map)
            assert record.probability == pytest.approx(t1**2 * t2**2 / 16, abs=1e-12)
            assert fidelity(record.collapsed, heralded_vacuum) == pytest.approx(1.0, abs=1e-12)

    def test_completeness(self, evolved, standard_map):
        (a2, t1, t2), signal, vac = evolved
        for state in (signal, vac):
            assert sum(outcome_distribution(state, standard_map).values()) == pytest.approx(1.0, abs=1e-10)
        expected_p1 = 16 * per_pattern_signal(a2, t1, t2)
        assert failure_probability(signal, standard_map) == pytest.approx(1.0 - expected_p1, abs=1e-10)

    def test_unpopulated_pattern(self, standard_map):
        registry = register_modes(PROTOCOL_MODES)
        record = project(vacuum(registry), enumerate_success_patterns()[0], standard_map)
        assert record.probability == 0.0
        assert record.collapsed is None

    def test_quadratic_in_amplitude(self, standard_map):
        registry = register_modes(PROTOCOL_MODES)
        pattern = DetectionPattern.of("D1a", "D2a", "D1b", "D2b")
        clicks = [standard_map.slot(d) for d in sorted(pattern.clicked)]
        base = fock_state(registry, clicks + [H("c3")], 0.1)
        assert project(scale(base, 2.0), pattern, standard_map).probability == pytest.approx(
            4 * project(base, pattern, standard_map).probability
        )

    def test_unmapped_detector(self, standard_map):
        registry = register_modes(PROTOCOL_MODES)
        with pytest.raises(RegistryError):
            project(vacuum(registry), DetectionPattern.of("D1a", "D9a"), standard_map)

    def test_rejects_multi_photon_click(self, standard_map):
        registry = register_modes(PROTOCOL_MODES)
        pattern = DetectionPattern.of("D1a", "D2a", "D1b", "D2b")
        clicks = [standard_map.slot(d) for d in sorted(pattern.clicked)]
        doubled = fock_state(registry, clicks + [H("a4")])
        assert project(doubled, pattern, standard_map).probability == 0.0


class TestProjectEnsemble:
    @pytest.fixture(scope="class")
    def branches(self, ref_sim):
        return ref_sim.signal_evolved, ref_sim.vacuum_evolved

    def test_single_branch_matches_project(self, branches, standard_map):
        signal, _ = branches
        pattern = enumerate_success_patterns()[5]
        probability, posterior = project_ensemble(EnsembleState.pure(signal), pattern, standard_map)
        record = project(signal, pattern, standard_map)
        assert probability == pytest.approx(record.probability, abs=1e-15)
        assert posterior.states[0].terms == pytest.approx(record.collapsed.terms)

    def test_vacuum_only(self, branches, ref_sim, standard_map):
        _, vac = branches
        t1, t2 = ref_sim.params.t1, ref_sim.t2
        first = enumerate_success_patterns()[0]
        probability, posterior = project_ensemble(EnsembleState.pure(vac), first, standard_map)
        assert probability == pytest.approx(t1**2 * t2**2 / 16, abs=1e-12)
        assert len(posterior.branches) == 1
        assert posterior.states[0].terms == pytest.approx({(0, 0, 0, 0): 1.0})

    def test_total_over_patterns(self, branches, standard_map):
        signal, vac = branches
        ensemble = EnsembleState.mixture([(0.8, signal), (0.2, vac)])
        total = 0.0
        for pattern in enumerate_success_patterns():
            probability, posterior = project_ensemble(ensemble, pattern, standard_map)
            total += probability
            assert sum(posterior.weights) == pytest.approx(1.0, abs=1e-12)
        assert total == pytest.approx(0.0115102, abs=1e-6)

    def test_zero_probability(self, standard_map):
        registry = register_modes(PROTOCOL_MODES)
        with pytest.raises(PostSelectionError):
            project_ensemble(EnsembleState.pure(vacuum(registry)), enumerate_success_patterns()[0], standard_map)


def test_collapsed_state_is_normalized(ref_sim):
    for record in ref_sim.signal:
        assert isinstance(record.collapsed, PureState)
        assert sum(abs(a) ** 2 for a in record.collapsed.terms.values()) == pytest.approx(1.0, abs=1e-10)
