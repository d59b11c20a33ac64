"""Parameter sweeps, the simulation-vs-closed-form validation grid and figure data."""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from itertools import product
from typing import Callable, Iterable, Optional, Sequence, TypeVar

from speamp import analytics
from speamp.config import COMPARE_TOLERANCE, FIGURE_POINTS, ProtocolConfig
from speamp.models import ParameterError, ProtocolParams, SweepSpec
from speamp.protocol import BranchSimulation, ProtocolOutcome, aggregate, simulate, t2_matched

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

METRICS = ("p1", "p2", "p_total", "eta_out", "gain")
SWEEP_COLUMNS = (
    "t1",
    "t2",
    "a2",
    "eta",
    "p1_sim",
    "p1_closed",
    "p2_sim",
    "p2_closed",
    "pt_sim",
    "pt_closed",
    "eta_out_sim",
    "eta_out_closed",
    "gain_sim",
    "gain_closed",
)

FIG2_CURVES = (("A", 0.1), ("B", 0.2), ("C", 0.4), ("D", 0.5), ("E", 0.6), ("F", 0.8), ("G", 0.9))
# (panel, a^2) pairs shared by the gain and total-probability figures
GAIN_PANELS = (("a", 0.5), ("b", 0.3))
GAIN_ETAS = (0.3, 0.6, 0.8)
FIGURES = (2, 3, 4, 5)


def grid(start: float, stop: float, steps: int) -> list[float]:
    """``steps`` evenly spaced points from ``start`` to ``stop`` inclusive."""
    if steps < 2:
        raise ParameterError(f"grid needs at least 2 steps, got {steps}")
    return [start + (stop - start) * i / (steps - 1) for i in range(steps)]


def _map(fn: Callable[[T], R], items: Sequence[T], workers: int) -> list[R]:
    """Map in input order, on a process pool when ``workers > 1``."""
    if workers <= 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# --- Single points ---


def params_from_config(cfg: ProtocolConfig) -> ProtocolParams:
    return ProtocolParams.from_a2(eta=cfg.eta, a2=cfg.a2, t1=cfg.t1, alpha=cfg.alpha, t2=cfg.t2)


def sweep_row(outcome: ProtocolOutcome, report) -> dict:
    params = outcome.params
    return {
        "t1": params.t1,
        "t2": outcome.t2,
        "a2": params.a2,
        "eta": params.eta,
        "p1_sim": outcome.p1,
        "p1_closed": report.p1,
        "p2_sim": outcome.p2,
        "p2_closed": report.p2,
        "pt_sim": outcome.p_total,
        "pt_closed": report.p_total,
        "eta_out_sim": outcome.eta_out,
        "eta_out_closed": report.eta_out,
        "gain_sim": outcome.gain,
        "gain_closed": report.gain,
    }


def evaluate(params: ProtocolParams) -> dict:
    """Simulate one point and pair every metric with its closed form, as one sweep row."""
    outcome = aggregate(simulate(params), params.eta)
    report = analytics.closed_form_report(params.eta, params.a, params.t1, params.t2)
    return sweep_row(outcome, report)


def run_sweep(spec: SweepSpec, base: ProtocolConfig, workers: int = 1) -> list[dict]:
    """Evaluate ``base`` at every grid point of ``spec.variable``; rows come back in grid order."""
    points = [params_from_config(replace(base, **{spec.variable: x})) for x in grid(spec.start, spec.stop, spec.steps)]
    logger.info(f"sweeping {spec.variable} over {len(points)} points with {workers} worker(s)")
    return _map(evaluate, points, workers)


# --- Validation ---


@dataclass(frozen=True)
class Deviation:
    eta: float
    a2: float
    t1: float
    metric: str
    simulated: Optional[float]
    closed: Optional[float]
    delta: float

    def __str__(self) -> str:
        return (
            f"eta={self.eta:.4g} a2={self.a2:.4g} t1={self.t1:.4g} {self.metric}: "
            f"sim={self.simulated} closed={self.closed} |diff|={self.delta:.3e}"
        )


@dataclass(frozen=True)
class ValidationReport:
    tolerance: float
    points: int
    worst: Optional[Deviation]
    offenders: tuple[Deviation, ...]

    @property
    def passed(self) -> bool:
        return not self.offenders


def _delta(simulated: Optional[float], closed: Optional[float]) -> float:
    if simulated is None or closed is None:
        return 0.0 if simulated is None and closed is None else math.inf
    return abs(simulated - closed)


def compare(outcome: ProtocolOutcome, eta: float) -> list[Deviation]:
    """Deviation of every metric of ``outcome`` from its closed form."""
    params = outcome.params
    report = analytics.closed_form_report(eta, params.a, params.t1, params.t2)
    deviations = []
    for metric in METRICS:
        sim_value, closed_value = getattr(outcome, metric), getattr(report, metric)
        deviations.append(
            Deviation(
                eta=eta,
                a2=params.a2,
                t1=params.t1,
                metric=metric,
                simulated=sim_value,
                closed=closed_value,
                delta=_delta(sim_value, closed_value),
            )
        )
    return deviations


def _validate_cell(cell: tuple[float, float, tuple[float, ...]]) -> list[Deviation]:
    a2, t1, etas = cell
    sim = simulate(ProtocolParams.from_a2(eta=1.0, a2=a2, t1=t1))
    deviations = []
    for eta in etas:
        deviations += compare(aggregate(sim, eta), eta)
    return deviations


def validate_grid(
    etas: Iterable[float],
    a2s: Iterable[float],
    t1s: Iterable[float],
    tolerance: float = COMPARE_TOLERANCE,
    workers: int = 1,
) -> ValidationReport:
    """Compare simulation and closed forms on the full (eta, a^2, t1) grid with matched t2.

    The simulation does not depend on eta, so it runs once per (a^2, t1) cell.
    """
    if not tolerance > 0.0:
        raise ParameterError(f"tolerance must be positive, got {tolerance}")
    etas = tuple(etas)
    cells = [(a2, t1, etas) for a2, t1 in product(a2s, t1s)]
    logger.info(f"validating {len(cells) * len(etas)} points ({len(cells)} simulations)")

    deviations = [d for cell in _map(_validate_cell, cells, workers) for d in cell]
    worst = max(deviations, key=lambda d: d.delta, default=None)
    offenders = tuple(d for d in deviations if d.delta > tolerance)
    if worst is not None:
        logger.info(f"worst deviation {worst.delta:.3e} ({worst})")
    return ValidationReport(tolerance=tolerance, points=len(cells) * len(etas), worst=worst, offenders=offenders)


def default_validation_grid() -> tuple[list[float], list[float], list[float]]:
    """eta and a^2 over 0.1..0.9 in steps of 0.1, t1 over 0.05..0.60 in steps of 0.05."""
    return grid(0.1, 0.9, 9), grid(0.1, 0.9, 9), grid(0.05, 0.6, 12)


# --- Figures ---


def _simulate_cell(cell: tuple[float, float]) -> BranchSimulation:
    a2, t1 = cell
    return simulate(ProtocolParams.from_a2(eta=1.0, a2=a2, t1=t1))


def _fig2() -> list[dict]:
    rows = []
    for curve, a2 in FIG2_CURVES:
        a = math.sqrt(a2)
        for t1 in grid(0.0, 1.0, FIGURE_POINTS):
            rows.append({"curve": curve, "a2": a2, "t1": t1, "t2": t2_matched(t1, a)})
    return rows


def _fig3() -> list[dict]:
    return [{"a2": a2, "threshold": analytics.t1_threshold(math.sqrt(a2))} for a2 in grid(0.0, 1.0, FIGURE_POINTS)]


def _gain_figure(column: str, with_simulation: bool, workers: int) -> list[dict]:
    t1s = grid(0.001, 0.999, FIGURE_POINTS)
    sims: dict[tuple[float, float], BranchSimulation] = {}
    if with_simulation:
        cells = [(a2, t1) for _, a2 in GAIN_PANELS for t1 in t1s]
        sims = dict(zip(cells, _map(_simulate_cell, cells, workers)))

    rows = []
    for (panel, a2), eta in product(GAIN_PANELS, GAIN_ETAS):
        a = math.sqrt(a2)
        for t1 in t1s:
            if column == "gain":
                row = {"panel": panel, "a2": a2, "eta": eta, "t1": t1, "gain": analytics.gain_closed(eta, a, t1)}
            else:
                row = {"panel": panel, "a2": a2, "eta": eta, "t1": t1, "pt": analytics.pt_closed(eta, a, t1)}
            if with_simulation:
                outcome = aggregate(sims[(a2, t1)], eta)
                row[f"{column}_sim"] = outcome.gain if column == "gain" else outcome.p_total
            rows.append(row)
    return rows


def figure_rows(n: int, simulate: bool = False, workers: int = 1) -> list[dict]:
    """Data behind figure ``n``: matched t2 curves (2), gain threshold (3), gain (4), total probability (5).

    With ``simulate`` the gain and probability figures carry a simulated column next to the closed form.
    """
    if n == 2:
        return _fig2()
    if n == 3:
        return _fig3()
    if n == 4:
        return _gain_figure("gain", simulate, workers)
    if n == 5:
        return _gain_figure("pt", simulate, workers)
    raise ParameterError(f"figure must be one of {FIGURES}, got {n}")
