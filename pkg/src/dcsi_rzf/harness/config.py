"""Experiment configuration: JSON document <-> SweepConfig."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from ..channel import SystemConfig, db_to_linear, sigmas_from_sq
from ..errors import ConfigError

__all__ = ["SweepConfig", "AlphaGrid", "load_config", "config_from_dict", "m_tx_for", "DEFAULT_CONFIG"]

# Reference operating point: n=3, beta=1, P=10 dB,
# alpha=1/P, sigma^2=0.1 at every TX.
DEFAULT_CONFIG: dict[str, Any] = {
    "base": {
        "n": 3,
        "K": 30,
        "beta": 1.0,
        "P_dB": 10.0,
        "alpha": 0.1,
        "sigma_sq": 0.1,
        "seed": 0,
        "trials": 500,
    },
    "sweep_variable": "K",
    "sweep_values": [30, 60, 90],
    "centralized_baseline": False,
    "alpha_grid": {"min": 1e-3, "max": 10.0, "points": 50},
    "refine_rounds": 20,
}


@dataclass(frozen=True)
class AlphaGrid:
    min: float = 1e-3
    max: float = 10.0
    points: int = 50

    def values(self) -> np.ndarray:
        if not (0 < self.min < self.max) or self.points < 2:
            raise ConfigError(f"invalid alpha grid {self}")
        return np.logspace(math.log10(self.min), math.log10(self.max), self.points)


@dataclass(frozen=True)
class SweepConfig:
    """A base system plus the variable to sweep.

    ``P_dB`` is carried alongside ``base`` (which stores linear power) so
    records can echo the configured value exactly.
    """

    base: SystemConfig
    P_dB: float
    sweep_variable: str = "K"
    sweep_values: tuple = ()
    centralized_baseline: bool = False
    baseline_sigma_sq: float | None = None
    alpha_grid: AlphaGrid = field(default_factory=AlphaGrid)
    refine_rounds: int = 20

    def __post_init__(self):
        object.__setattr__(self, "sweep_values", tuple(self.sweep_values))
        if self.sweep_variable not in ("K", "alpha"):
            raise ConfigError(f"sweep_variable must be 'K' or 'alpha', got {self.sweep_variable!r}")
        vals = self.sweep_values
        if vals:
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise ConfigError(f"sweep_values must be strictly increasing, got {list(vals)}")
            if self.sweep_variable == "alpha":
                bad = [a for a in vals if not a > 0]
                if bad:
                    raise ConfigError(f"alpha values must be > 0, offending: {bad}")
            else:
                bad = [k for k in vals if int(k) != k or k < 1]
                if bad:
                    raise ConfigError(f"K values must be positive integers, offending: {bad}")
        if self.refine_rounds < 0:
            raise ConfigError("refine_rounds must be >= 0")

    @property
    def beta(self) -> float:
        return self.base.beta

    def centralized_sigma_sq(self) -> float:
        if self.baseline_sigma_sq is not None:
            return float(self.baseline_sigma_sq)
        return float(np.mean(self.base.sigma_sq))

    def centralized(self, config: SystemConfig) -> SystemConfig:
        """n = 1 counterpart of ``config`` at matched M, K, alpha, P and seed."""
        return config.replace(n=1, M_TX=config.M, sigma=(math.sqrt(self.centralized_sigma_sq()),))


def m_tx_for(K: int, beta: float, n: int) -> int | None:
    """Per-TX antenna count for ``M = beta K``, or None if not an integer."""
    m_tx = beta * K / n
    r = round(m_tx)
    if r >= 1 and abs(m_tx - r) <= 1e-9 * max(1.0, m_tx):
        return int(r)
    return None


def _sigma_sq_list(value, n: int) -> list[float]:
    if isinstance(value, (int, float)):
        return [float(value)] * n
    vals = [float(v) for v in value]
    if len(vals) != n:
        raise ConfigError(f"sigma_sq has {len(vals)} entries, expected n={n}")
    return vals


def config_from_dict(doc: dict, overrides: dict | None = None) -> SweepConfig:
    """Build a SweepConfig from a JSON-like mapping.

    ``overrides`` (from CLI flags) may set ``seed``, ``trials`` and
    ``centralized_baseline``; None values are ignored.
    """
    doc = json.loads(json.dumps(doc))  # deep copy
    base = dict(DEFAULT_CONFIG["base"])
    base.update(doc.get("base", {}))
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    for key in ("seed", "trials"):
        if key in overrides:
            base[key] = overrides[key]

    try:
        n = int(base["n"])
        K = int(base["K"])
        if "M_TX" in base and base["M_TX"] is not None:
            M_TX = int(base["M_TX"])
        else:
            M_TX = m_tx_for(K, float(base["beta"]), n)
            if M_TX is None:
                raise ConfigError(f"beta*K/n = {float(base['beta']) * K / n} is not an integer")
        P_dB = float(base["P_dB"])
        system = SystemConfig(
            n=n,
            M_TX=M_TX,
            K=K,
            P=db_to_linear(P_dB),
            alpha=float(base["alpha"]),
            sigma=sigmas_from_sq(_sigma_sq_list(base["sigma_sq"], n)),
            base_seed=int(base["seed"]),
            trials=int(base["trials"]),
        )
    except KeyError as exc:
        raise ConfigError(f"missing configuration key {exc}") from None

    grid = doc.get("alpha_grid", DEFAULT_CONFIG["alpha_grid"])
    alpha_grid = AlphaGrid(float(grid["min"]), float(grid["max"]), int(grid["points"]))
    variable = doc.get("sweep_variable", DEFAULT_CONFIG["sweep_variable"])
    if "sweep_values" in doc:
        values = tuple(doc["sweep_values"])
    elif variable == "alpha":
        values = tuple(float(a) for a in alpha_grid.values())
    else:
        values = tuple(DEFAULT_CONFIG["sweep_values"])
    return SweepConfig(
        base=system,
        P_dB=P_dB,
        sweep_variable=variable,
        sweep_values=values,
        centralized_baseline=bool(overrides.get("centralized_baseline", doc.get("centralized_baseline", False))),
        baseline_sigma_sq=doc.get("baseline_sigma_sq"),
        alpha_grid=alpha_grid,
        refine_rounds=int(doc.get("refine_rounds", DEFAULT_CONFIG["refine_rounds"])),
    )


def load_config(path: str | Path | None, overrides: dict | None = None) -> SweepConfig:
    if path is None:
        return config_from_dict({}, overrides)
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return config_from_dict(doc, overrides)


def with_sweep(cfg: SweepConfig, variable: str, values: Sequence) -> SweepConfig:
    from dataclasses import replace

    return replace(cfg, sweep_variable=variable, sweep_values=tuple(values))
