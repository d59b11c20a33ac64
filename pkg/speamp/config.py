from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

# Amplitudes below this magnitude are dropped from sparse states.
PRUNE_TOLERANCE = 1e-12
# Tolerance for norms, fidelities and sim-vs-closed comparisons.
COMPARE_TOLERANCE = 1e-10
# Ensemble weights must sum to one within this.
WEIGHT_TOLERANCE = 1e-12
# alpha^2 + beta^2 and a^2 + b^2 must equal one within this.
COEFFICIENT_TOLERANCE = 1e-12
# Single-photon element matrices must satisfy U^dagger U = I within this.
UNITARITY_TOLERANCE = 1e-14

SIGNIFICANT_DIGITS = 10
FIGURE_POINTS = 201


@dataclass(frozen=True)
class ProtocolConfig:
    eta: float = 0.6
    a2: float = 0.5
    alpha: float = 1.0
    t1: float = 0.25
    t2: Optional[float] = None  # None = matched via t2_matched


@dataclass(frozen=True)
class SweepConfig:
    variable: str = "t1"  # "t1", "a2" or "eta"
    start: float = 0.05
    stop: float = 0.45
    steps: int = 9


@dataclass(frozen=True)
class Config:
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    log_level: str = "WARNING"
    workers: int = 1
    tolerance: float = COMPARE_TOLERANCE
    out: Optional[str] = None


def _parse_t2(raw: str) -> Optional[float]:
    return None if raw.strip().lower() == "auto" else float(raw)


_PROTOCOL_KEYS = {"eta": float, "a2": float, "alpha": float, "t1": float, "t2": _parse_t2}
_SWEEP_KEYS = {"variable": str, "start": float, "stop": float, "steps": int}
_TOP_KEYS = {"log_level": str, "workers": int, "tolerance": float, "out": str}


def parse_config(text: str, source: str = "<config>") -> Config:
    """Parse flat ``key=value`` text into a Config.

    Keys: eta, a2, alpha, t1, t2 (number or ``auto``), variable, start, stop, steps,
          log_level, workers, tolerance, out
    """
    protocol: dict = {}
    sweep: dict = {}
    top: dict = {}

    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        try:
            if key in _PROTOCOL_KEYS:
                protocol[key] = _PROTOCOL_KEYS[key](value)
            elif key in _SWEEP_KEYS:
                sweep[key] = _SWEEP_KEYS[key](value)
            elif key in _TOP_KEYS:
                top[key] = _TOP_KEYS[key](value)
            else:
                raise ValueError(f"unknown key {key!r}")
        except ValueError as exc:
            raise ValueError(f"{source}:{lineno}: {exc}") from exc

    return Config(protocol=ProtocolConfig(**protocol), sweep=SweepConfig(**sweep), **top)


def load_config(path: Path) -> Config:
    """Load a key=value config file and return a validated Config object."""
    return parse_config(Path(path).read_text(encoding="utf-8"), source=str(path))


def merge_overrides(config: Config, **flags) -> Config:
    """Return a copy of ``config`` where every flag that is not None wins over the file value.

    ``t2="auto"`` is an explicit override back to the matched value.
    """
    given = {k: v for k, v in flags.items() if v is not None}
    if "t2" in given and isinstance(given["t2"], str):
        given["t2"] = _parse_t2(given["t2"])

    protocol = replace(config.protocol, **{f.name: given[f.name] for f in fields(ProtocolConfig) if f.name in given})
    sweep = replace(config.sweep, **{f.name: given[f.name] for f in fields(SweepConfig) if f.name in given})
    top = {k: given[k] for k in _TOP_KEYS if k in given}
    return replace(config, protocol=protocol, sweep=sweep, **top)
