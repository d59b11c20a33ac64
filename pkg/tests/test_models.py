import math

import pytest

from speamp.models import (
    DetectionPattern,
    H,
    ParameterError,
    Polarization,
    ProtocolParams,
    SpeampError,
    V,
    check_unit,
)


class TestModeId:
    def test_str(self):
        assert str(H("c3")) == "c3H"
        assert str(V("d3")) == "d3V"

    def test_h_sorts_before_v(self):
        assert sorted([V("a1"), H("b1"), H("a1")], key=lambda m: m.sort_key) == [H("a1"), V("a1"), H("b1")]

    def test_polarization_values(self):
        assert V("a1").polarization is Polarization.V


class TestDetectionPattern:
    def test_order_independent(self):
        assert DetectionPattern.of("D2b", "D1a", "D1b", "D2a") == DetectionPattern.of("D1a", "D2a", "D1b", "D2b")

    def test_label_lists_alice_first(self):
        assert DetectionPattern.of("D4b", "D3b", "D4a", "D1a").label == "D1aD4aD3bD4b"


class TestCheckUnit:
    def test_closed_interval(self):
        check_unit("t1", 0.0)
        check_unit("t1", 1.0)

    @pytest.mark.parametrize("value", [0.0, 1.0])
    def test_open_interval(self, value):
        with pytest.raises(ParameterError):
            check_unit("a2", value, open_interval=True)

    @pytest.mark.parametrize("value", [-1e-9, 1.0 + 1e-9, math.inf, math.nan])
    def test_outside(self, value):
        with pytest.raises(ParameterError):
            check_unit("eta", value)


class TestProtocolParams:
    def test_from_a2(self):
        params = ProtocolParams.from_a2(eta=0.8, a2=0.3, t1=0.2, alpha=0.6)
        assert params.a == pytest.approx(math.sqrt(0.3))
        assert params.a2 == pytest.approx(0.3)
        assert params.b == pytest.approx(math.sqrt(0.7))
        assert params.beta == pytest.approx(0.8)
        assert params.is_matched

    def test_explicit_t2(self):
        assert not ProtocolParams(eta=0.5, a=0.5, t1=0.3, t2=0.4).is_matched

    def test_negative_beta_allowed(self):
        params = ProtocolParams(eta=0.5, a=0.5, t1=0.3, alpha=0.6, beta=-0.8)
        assert params.beta == -0.8

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"eta": 1.2, "a": 0.5, "t1": 0.3},
            {"eta": 0.5, "a": -0.1, "t1": 0.3},
            {"eta": 0.5, "a": 0.5, "t1": 0.3, "t2": 1.5},
            {"eta": 0.5, "a": 0.5, "t1": 0.3, "alpha": 0.6, "beta": 0.6},
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(ParameterError):
            ProtocolParams(**kwargs)

    def test_alpha_out_of_range(self):
        with pytest.raises(ParameterError):
            ProtocolParams.from_a2(eta=0.5, a2=0.5, t1=0.3, alpha=1.5)

    def test_errors_are_value_errors(self):
        assert issubclass(ParameterError, SpeampError)
        assert issubclass(SpeampError, ValueError)
