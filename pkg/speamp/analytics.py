"""Closed-form success probabilities, output fidelity and gain.

Nothing here touches the simulator; the two only meet in the validation harness.
"""

import math
from typing import Optional

from speamp.models import ClosedFormReport, DegenerateParameterError, check_unit

BOUNDARY_MARGIN = 1e-9


def _check_open(name: str, value: float) -> None:
    check_unit(name, value, open_interval=True)


def _den(a2: float, t1: float) -> float:
    return a2 - 2.0 * a2 * t1 + t1


def _matched_t2(a: float, t1: float) -> float:
    # independent of protocol.t2_matched
    a2 = a * a
    return t1 * (1.0 - a2) / _den(a2, t1)


def p1_closed(a: float, t1: float) -> float:
    """Single-photon branch success probability at matched t2: 2 a^2 (1-a^2)^2 t1^3 (1-t1) / den^2."""
    _check_open("a", a)
    check_unit("t1", t1)
    a2 = a * a
    return 2.0 * a2 * (1.0 - a2) ** 2 * t1**3 * (1.0 - t1) / _den(a2, t1) ** 2


def p2_closed(a: float, t1: float) -> float:
    """Vacuum branch success probability at matched t2: t1^4 (1-a^2)^2 / den^2 (= t1^2 t2^2)."""
    _check_open("a", a)
    check_unit("t1", t1)
    a2 = a * a
    return t1**4 * (1.0 - a2) ** 2 / _den(a2, t1) ** 2


def pt_closed(eta: float, a: float, t1: float) -> float:
    check_unit("eta", eta)
    return eta * p1_closed(a, t1) + (1.0 - eta) * p2_closed(a, t1)


def eta_out_closed(eta: float, a: float, t1: float) -> float:
    """Output fidelity 2 eta a^2 (1-t1) / (2 eta a^2 (1-t1) + (1-eta) t1)."""
    check_unit("eta", eta)
    _check_open("a", a)
    check_unit("t1", t1)
    num = 2.0 * eta * a * a * (1.0 - t1)
    den = num + (1.0 - eta) * t1
    if den == 0.0:
        raise DegenerateParameterError(f"output fidelity undefined at eta={eta}, t1={t1}")
    return num / den


def gain_closed(eta: float, a: float, t1: float) -> float:
    if eta == 0.0:
        raise DegenerateParameterError("gain is undefined at eta = 0")
    return eta_out_closed(eta, a, t1) / eta


def t1_threshold(a: float) -> float:
    """Largest t1 with gain > 1: 2 a^2 / (1 + 2 a^2)."""
    check_unit("a", a)
    return 2.0 * a * a / (1.0 + 2.0 * a * a)


def g_limit(eta: float) -> float:
    """Gain as t1 -> 0, independent of a."""
    check_unit("eta", eta)
    if eta == 0.0:
        raise DegenerateParameterError("gain limit is undefined at eta = 0")
    return 1.0 / eta


def p1_general(a: float, t1: float, t2: float) -> float:
    """Single-photon branch success probability for any t2: a^2 t1 t2^2 (1-t1) + b^2 t1^2 t2 (1-t2)."""
    check_unit("a", a)
    check_unit("t1", t1)
    check_unit("t2", t2)
    a2 = a * a
    return a2 * t1 * t2**2 * (1.0 - t1) + (1.0 - a2) * t1**2 * t2 * (1.0 - t2)


def p2_general(t1: float, t2: float) -> float:
    check_unit("t1", t1)
    check_unit("t2", t2)
    return t1**2 * t2**2


def output_entanglement_ratio(a: float, t1: float, t2: float) -> float:
    """|c3 amplitude| / |d3 amplitude| of the heralded signal state; 1 at matched t2."""
    check_unit("a", a)
    check_unit("t1", t1)
    check_unit("t2", t2)
    c3 = a * t2 * math.sqrt(t1 * (1.0 - t1))
    d3 = math.sqrt(1.0 - a * a) * t1 * math.sqrt(t2 * (1.0 - t2))
    if d3 == 0.0:
        raise DegenerateParameterError(f"no photon reaches d3 at a={a}, t1={t1}, t2={t2}")
    return c3 / d3


def closed_form_report(eta: float, a: float, t1: float, t2: Optional[float] = None) -> ClosedFormReport:
    """Every closed-form metric at one point.

    With ``t2=None`` the matched forms apply; an explicit t2 switches to the general forms, which
    also cover a in {0, 1}. ``near_boundary`` flags t1 within 1e-9 of 0 or 1, where the formulas
    become ratios of vanishing quantities.
    """
    check_unit("eta", eta)
    check_unit("a", a)
    check_unit("t1", t1)
    matched = t2 is None
    if matched:
        if a in (0.0, 1.0):
            raise DegenerateParameterError(f"matched t2 is undefined for a = {a}; pass t2 explicitly")
        t2 = _matched_t2(a, t1)
        p1, p2 = p1_closed(a, t1), p2_closed(a, t1)
    else:
        p1, p2 = p1_general(a, t1, t2), p2_general(t1, t2)

    p_total = eta * p1 + (1.0 - eta) * p2
    if p_total <= 0.0:
        eta_out = None
    elif matched:
        eta_out = eta_out_closed(eta, a, t1)
    else:
        eta_out = eta * p1 / p_total
    gain = eta_out / eta if eta_out is not None and eta > 0.0 else None
    near_boundary = t1 < BOUNDARY_MARGIN or t1 > 1.0 - BOUNDARY_MARGIN
    return ClosedFormReport(
        p1=p1,
        p2=p2,
        p_total=p_total,
        eta_out=eta_out,
        gain=gain,
        t1_threshold=t1_threshold(a),
        g_limit=1.0 / eta if eta > 0.0 else None,
        t2=t2,
        near_boundary=near_boundary,
    )
