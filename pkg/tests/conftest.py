import math

import pytest

from speamp.fock import PureState, add, fock_state, normalize, register_modes
from speamp.models import H, ProtocolParams, V
from speamp.protocol import default_correction_table, simulate


def spe_state(alpha: float, beta: float, weights=(1.0, 1.0)) -> PureState:
    """(alpha|H> + beta|V>) shared between c3 and d3 with the given spatial weights, normalized."""
    registry = register_modes(["c3", "d3"])
    wc, wd = weights
    return normalize(
        add(
            fock_state(registry, [H("c3")], wc * alpha),
            fock_state(registry, [V("c3")], wc * beta),
            fock_state(registry, [H("d3")], wd * alpha),
            fock_state(registry, [V("d3")], wd * beta),
        )
    )


@pytest.fixture
def io_registry():
    return register_modes(["a1", "b1"])


@pytest.fixture
def ref_params():
    """eta=0.8, a^2=0.3, t1=0.2 with polarization (0.6, 0.8) and matched t2."""
    return ProtocolParams.from_a2(eta=0.8, a2=0.3, t1=0.2, alpha=0.6)


@pytest.fixture
def balanced_params():
    """eta=0.6, a^2=0.5, t1=0.25, alpha=1; matched t2 equals t1."""
    return ProtocolParams(eta=0.6, a=math.sqrt(0.5), t1=0.25)


@pytest.fixture(scope="session")
def ref_sim():
    return simulate(ProtocolParams.from_a2(eta=0.8, a2=0.3, t1=0.2, alpha=0.6))


@pytest.fixture(scope="session")
def table():
    return default_correction_table()


@pytest.fixture
def spe():
    return spe_state
