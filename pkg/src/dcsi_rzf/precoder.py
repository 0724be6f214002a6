"""Per-TX regularized ZF, distributed precoder assembly and empirical rates."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channel import ChannelRealization, SystemConfig, generate_realization
from .errors import DegenerateChannelError, DomainError, InvalidInputError
from .numerics import as_complex_matrix, frobenius_norm_sq, regularized_pseudo_inverse

__all__ = [
    "PrecoderSet",
    "SinrReport",
    "TrialOutcome",
    "MonteCarloResult",
    "rzf_precoder",
    "assemble_dcsi",
    "build_precoders",
    "empirical_sinr",
    "run_trial",
    "monte_carlo_rate",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PrecoderSet:
    per_tx: list[np.ndarray]
    dcsi: np.ndarray
    psi: list[float]


@dataclass(frozen=True)
class SinrReport:
    per_user: np.ndarray
    rate_per_user: float
    signal: np.ndarray
    interference: np.ndarray


def rzf_precoder(H_hat, alpha: float, P: float) -> tuple[np.ndarray, float]:
    """Regularized ZF precoder of one TX, normalized to total power ``P``.

    Returns ``(T, psi)`` with ``T = (ĤᴴĤ + MαI)⁻¹Ĥᴴ · √(P/ψ)`` and
    ``ψ = ‖(ĤᴴĤ + MαI)⁻¹Ĥᴴ‖_F²``.
    """
    if not (P > 0 and math.isfinite(P)):
        raise DomainError(f"power P must be > 0, got {P}")
    W = regularized_pseudo_inverse(H_hat, alpha)
    psi = frobenius_norm_sq(W)
    if psi == 0.0:
        raise DegenerateChannelError("precoder normalization is zero (zero channel estimate)")
    return W * math.sqrt(P / psi), psi


def assemble_dcsi(per_tx_precoders: Sequence[np.ndarray], M_TX: int) -> np.ndarray:
    """Stack row-block j of TX j's precoder into the effective global precoder."""
    if len(per_tx_precoders) == 0:
        raise InvalidInputError("need at least one precoder")
    blocks = [np.asarray(T) for T in per_tx_precoders]
    n = len(blocks)
    shape = blocks[0].shape
    if any(T.ndim != 2 or T.shape != shape for T in blocks):
        raise InvalidInputError("all per-TX precoders must share the same M×K shape")
    if shape[0] != n * M_TX:
        raise InvalidInputError(f"precoder has {shape[0]} rows, expected n*M_TX = {n * M_TX}")
    out = np.empty(shape, dtype=np.result_type(*blocks))
    for j, T in enumerate(blocks):
        rows = slice(j * M_TX, (j + 1) * M_TX)
        out[rows] = T[rows]
    return out


def build_precoders(realization: ChannelRealization, config: SystemConfig) -> PrecoderSet:
    per_tx, psi = [], []
    for H_hat in realization.estimates:
        T, p = rzf_precoder(H_hat, config.alpha, config.P)
        per_tx.append(T)
        psi.append(p)
    return PrecoderSet(per_tx=per_tx, dcsi=assemble_dcsi(per_tx, config.M_TX), psi=psi)


def empirical_sinr(H, T) -> SinrReport:
    """Per-user SINR with unit noise power and interference treated as noise."""
    H = as_complex_matrix(H, "H")
    T = as_complex_matrix(T, "T")
    if H.shape[1] != T.shape[0] or H.shape[0] != T.shape[1]:
        raise InvalidInputError(f"H {H.shape} and T {T.shape} do not conform")
    G = H @ T
    power = G.real ** 2 + G.imag ** 2
    signal = np.diag(power).copy()
    interference = power.sum(axis=1) - signal
    sinr = signal / (1.0 + interference)
    rate = float(np.mean(np.log2(1.0 + sinr)))
    return SinrReport(per_user=sinr, rate_per_user=rate, signal=signal, interference=interference)


@dataclass(frozen=True)
class TrialOutcome:
    trial_index: int
    rate: float = math.nan
    psi: tuple[float, ...] = ()
    dcsi_power: float = math.nan
    mean_sinr: float = math.nan
    mean_interference: float = math.nan
    per_tx_power: tuple[float, ...] = ()
    failed: bool = False


def run_trial(config: SystemConfig, trial_index: int) -> TrialOutcome:
    realization = generate_realization(config, trial_index)
    try:
        pre = build_precoders(realization, config)
    except DegenerateChannelError:
        log.warning("trial %d: degenerate channel estimate, excluded", trial_index)
        return TrialOutcome(trial_index=trial_index, failed=True)
    report = empirical_sinr(realization.H, pre.dcsi)
    return TrialOutcome(
        trial_index=trial_index,
        rate=report.rate_per_user,
        psi=tuple(pre.psi),
        dcsi_power=frobenius_norm_sq(pre.dcsi),
        mean_sinr=float(np.mean(report.per_user)),
        mean_interference=float(np.mean(report.interference)),
        per_tx_power=tuple(frobenius_norm_sq(T) for T in pre.per_tx),
    )


def _run_chunk(config: SystemConfig, indices: Sequence[int]) -> list[TrialOutcome]:
    return [run_trial(config, t) for t in indices]


@dataclass(frozen=True)
class MonteCarloResult:
    """Trial-averaged empirical performance.

    ``std_error`` is the sample standard deviation of the per-trial rates
    divided by √(successful trials); it is 0 when only one trial succeeded.
    """

    mean_rate: float
    std_error: float
    mean_psi: list[float]
    failures: int
    trials: int
    mean_dcsi_power: float
    mean_sinr: float
    mean_interference: float
    outcomes: list[TrialOutcome] = field(repr=False, default_factory=list)

    @property
    def trial_rates(self) -> np.ndarray:
        return np.array([o.rate for o in self.outcomes if not o.failed])


def monte_carlo_rate(config: SystemConfig, workers: int | None = 1) -> MonteCarloResult:
    """Average the empirical per-user rate over ``config.trials`` realizations.

    Parameters
    ----------
    config : SystemConfig
    workers : int or None
        Process count; ``None`` lets the executor choose. Results are
        reduced in ascending trial order, so the output does not depend on it.
    """
    indices = list(range(config.trials))
    if workers == 1 or config.trials == 1:
        outcomes = _run_chunk(config, indices)
    else:
        n_chunks = max(1, min(config.trials, 4 * (workers or 4)))
        chunks = [indices[i::n_chunks] for i in range(n_chunks)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_run_chunk, [config] * len(chunks), chunks)
            outcomes = [o for part in parts for o in part]
        outcomes.sort(key=lambda o: o.trial_index)

    ok = [o for o in outcomes if not o.failed]
    failures = len(outcomes) - len(ok)
    if not ok:
        raise DegenerateChannelError(f"all {config.trials} trials failed")
    rates = np.array([o.rate for o in ok])
    std_error = float(np.std(rates, ddof=1) / math.sqrt(len(rates))) if len(rates) > 1 else 0.0
    psi = np.array([o.psi for o in ok])
    return MonteCarloResult(
        mean_rate=float(np.mean(rates)),
        std_error=std_error,
        mean_psi=[float(v) for v in psi.mean(axis=0)],
        failures=failures,
        trials=config.trials,
        mean_dcsi_power=float(np.mean([o.dcsi_power for o in ok])),
        mean_sinr=float(np.mean([o.mean_sinr for o in ok])),
        mean_interference=float(np.mean([o.mean_interference for o in ok])),
        outcomes=outcomes,
    )
