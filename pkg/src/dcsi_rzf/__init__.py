"""Regularized zero-forcing with distributed channel state information.

Monte Carlo simulation of per-transmitter RZF precoding from independent
channel estimates, its large-system deterministic equivalents, and
numerical checks of the random-matrix lemmas behind them.
"""

from .channel import SystemConfig, derive_csit_quality, generate_realization
from .detequiv import (
    DetEquivalents,
    deterministic_equivalents,
    fixed_point_delta,
    gamma0,
    interference_det,
    sinr_det,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DcsiError,
    DegenerateChannelError,
    DomainError,
    InvalidInputError,
)
from .precoder import MonteCarloResult, monte_carlo_rate, rzf_precoder

__version__ = "0.1.0"

__all__ = [
    "SystemConfig",
    "derive_csit_quality",
    "generate_realization",
    "DetEquivalents",
    "deterministic_equivalents",
    "fixed_point_delta",
    "gamma0",
    "interference_det",
    "sinr_det",
    "ConfigError",
    "ConvergenceError",
    "DcsiError",
    "DegenerateChannelError",
    "DomainError",
    "InvalidInputError",
    "MonteCarloResult",
    "monte_carlo_rate",
    "rzf_precoder",
]
