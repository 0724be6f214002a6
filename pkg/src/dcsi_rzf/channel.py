"""System configuration and distributed-CSIT channel generation.

Every TX ``j`` holds its own estimate of the full K×M channel,

    Ĥ⁽ʲ⁾ = √(1 − σⱼ²) H + σⱼ Δ⁽ʲ⁾,

with H and all Δ⁽ʲ⁾ mutually independent, entries i.i.d. CN(0, 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, DomainError

__all__ = [
    "SystemConfig",
    "CsitQuality",
    "ChannelRealization",
    "derive_csit_quality",
    "trial_rng",
    "complex_gaussian",
    "generate_realization",
    "db_to_linear",
    "estimate_from",
    "sigmas_from_sq",
]

# Role tags keep the H draw and each TX's noise draw on separate streams.
ROLE_CHANNEL = 0
ROLE_NOISE = 1
ROLE_AUX = 2


def db_to_linear(p_db: float) -> float:
    return 10.0 ** (p_db / 10.0)


@dataclass(frozen=True)
class SystemConfig:
    """Network dimensions, power, regularization and CSIT quality.

    ``sigma`` holds the per-TX noise standard deviations σ⁽ʲ⁾ (not squared);
    ``P`` is the linear total power.
    """

    n: int
    M_TX: int
    K: int
    P: float
    alpha: float
    sigma: tuple[float, ...]
    base_seed: int = 0
    trials: int = 500

    def __post_init__(self):
        object.__setattr__(self, "sigma", tuple(float(s) for s in self.sigma))
        if self.n < 1 or self.M_TX < 1 or self.K < 1:
            raise ConfigError(f"n, M_TX, K must be >= 1 (got {self.n}, {self.M_TX}, {self.K})")
        if len(self.sigma) != self.n:
            raise ConfigError(f"expected {self.n} sigma values, got {len(self.sigma)}")
        if self.M < self.K:
            raise ConfigError(f"beta = M/K must be >= 1 (M={self.M}, K={self.K})")
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ConfigError(f"alpha must be > 0, got {self.alpha}")
        if not (self.P > 0 and math.isfinite(self.P)):
            raise ConfigError(f"P must be > 0, got {self.P}")
        for s in self.sigma:
            if not 0.0 <= s <= 1.0:
                raise ConfigError(f"sigma values must lie in [0, 1], got {s}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.base_seed < 0:
            raise ConfigError("base_seed must be non-negative")

    @property
    def M(self) -> int:
        return self.n * self.M_TX

    @property
    def beta(self) -> float:
        return self.M / self.K

    @property
    def sigma_sq(self) -> tuple[float, ...]:
        return tuple(s * s for s in self.sigma)

    @classmethod
    def from_sigma_sq(cls, *, n, M_TX, K, P, alpha, sigma_sq, base_seed=0, trials=500):
        return cls(
            n=n,
            M_TX=M_TX,
            K=K,
            P=P,
            alpha=alpha,
            sigma=tuple(math.sqrt(s) for s in sigma_sq),
            base_seed=base_seed,
            trials=trials,
        )

    def replace(self, **changes) -> "SystemConfig":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True)
class CsitQuality:
    """Estimate quality of one TX and the rank-2 update coefficients.

    c0 = 1 − σ², c1 = σ², c2 = σ√(1 − σ²), so that c0 + c1 = 1 and c0 c1 = c2².
    """

    sigma: float
    c0: float
    c1: float
    c2: float


def derive_csit_quality(sigma: float) -> CsitQuality:
    sigma = float(sigma)
    if not 0.0 <= sigma <= 1.0:
        raise DomainError(f"sigma must lie in [0, 1], got {sigma}")
    s2 = sigma * sigma
    return CsitQuality(sigma=sigma, c0=1.0 - s2, c1=s2, c2=sigma * math.sqrt(1.0 - s2))


@dataclass(frozen=True)
class ChannelRealization:
    H: np.ndarray
    estimates: list[np.ndarray] = field(default_factory=list)
    noises: list[np.ndarray] = field(default_factory=list)


def trial_rng(base_seed: int, *key: int) -> np.random.Generator:
    """Counter-based generator for the stream identified by ``(base_seed, *key)``.

    Streams for distinct keys are statistically independent and do not depend
    on the order in which they are created.
    """
    ss = np.random.SeedSequence(entropy=int(base_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    """i.i.d. CN(0, 1) samples: real and imaginary parts N(0, 1/2)."""
    z = rng.standard_normal((2,) + tuple(np.atleast_1d(shape)))
    return (z[0] + 1j * z[1]) * math.sqrt(0.5)


def generate_realization(config: SystemConfig, trial_index: int) -> ChannelRealization:
    """Draw H and the n per-TX estimates for one Monte Carlo trial.

    The output depends only on ``(config.base_seed, trial_index)`` and the
    dimensions, so trials may be evaluated in any order or process.
    """
    if trial_index < 0:
        raise DomainError(f"trial_index must be >= 0, got {trial_index}")
    K, M = config.K, config.M
    H = complex_gaussian(trial_rng(config.base_seed, trial_index, ROLE_CHANNEL), (K, M))
    estimates, noises = [], []
    for j, sigma in enumerate(config.sigma):
        delta = complex_gaussian(trial_rng(config.base_seed, trial_index, ROLE_NOISE, j), (K, M))
        estimates.append(estimate_from(H, delta, sigma))
        noises.append(delta)
    return ChannelRealization(H=H, estimates=estimates, noises=noises)


def estimate_from(H: np.ndarray, noise: np.ndarray, sigma: float) -> np.ndarray:
    if sigma == 0.0:
        return H.copy()
    return math.sqrt(1.0 - sigma * sigma) * H + sigma * noise


def sigmas_from_sq(sigma_sq: Sequence[float]) -> tuple[float, ...]:
    out = []
    for s2 in sigma_sq:
        if not 0.0 <= s2 <= 1.0:
            raise ConfigError(f"sigma_sq values must lie in [0, 1], got {s2}")
        out.append(math.sqrt(s2))
    return tuple(out)
