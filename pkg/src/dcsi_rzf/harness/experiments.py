"""Sweeps over K and alpha, optimal-regularization search and the lemma suite."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, fields
from typing import Sequence

import numpy as np

from ..channel import SystemConfig, complex_gaussian, derive_csit_quality, trial_rng
from ..detequiv import deterministic_equivalents, gamma0, fixed_point_delta, sinr_det
from ..errors import ConfigError
from ..precoder import MonteCarloResult, monte_carlo_rate
from .. import rmt_lab
from ..rmt_lab import LemmaCheckReport
from .config import SweepConfig, m_tx_for

__all__ = [
    "ExperimentRecord",
    "RECORD_FIELDS",
    "make_record",
    "run_point",
    "run_user_sweep",
    "run_alpha_sweep",
    "OptimalAlpha",
    "find_optimal_alpha",
    "run_lemma_suite",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExperimentRecord:
    K: int
    M: int
    n: int
    M_TX: int
    beta: float
    alpha: float
    P_dB: float
    sigma_sq: tuple[float, ...]
    trials: int
    empirical_rate_mean: float
    empirical_rate_stderr: float
    deterministic_rate: float
    deterministic_sinr: float
    delta: float
    seed: int


RECORD_FIELDS = tuple(f.name for f in fields(ExperimentRecord))


def make_record(config: SystemConfig, P_dB: float, mc: MonteCarloResult, det) -> ExperimentRecord:
    return ExperimentRecord(
        K=config.K,
        M=config.M,
        n=config.n,
        M_TX=config.M_TX,
        beta=float(config.beta),
        alpha=float(config.alpha),
        P_dB=float(P_dB),
        sigma_sq=tuple(float(s) for s in config.sigma_sq),
        trials=config.trials,
        empirical_rate_mean=float(mc.mean_rate),
        empirical_rate_stderr=float(mc.std_error),
        deterministic_rate=float(det.rate),
        deterministic_sinr=float(det.sinr),
        delta=float(det.delta),
        seed=config.base_seed,
    )


def run_point(config: SystemConfig, P_dB: float, *, numerator_mode="squared",
              interference_form="rederived", workers: int | None = 1) -> ExperimentRecord:
    mc = monte_carlo_rate(config, workers=workers)
    if mc.failures:
        log.warning("%d/%d trials failed at K=%d n=%d", mc.failures, config.trials, config.K, config.n)
    det = sinr_det(config, numerator_mode=numerator_mode, interference_form=interference_form)
    return make_record(config, P_dB, mc, det)


def _settings(cfg: SweepConfig, config: SystemConfig) -> list[SystemConfig]:
    out = [config]
    if cfg.centralized_baseline:
        out.append(cfg.centralized(config))
    return out


def run_user_sweep(cfg: SweepConfig, **kwargs) -> list[ExperimentRecord]:
    """One record per (K, setting) at fixed beta; settings are D-CSI and optionally n=1."""
    if cfg.sweep_variable != "K":
        raise ConfigError("run_user_sweep needs sweep_variable = 'K'")
    if not cfg.sweep_values:
        raise ConfigError("sweep_values is empty")
    base = cfg.base
    beta = base.beta
    m_tx = {int(K): m_tx_for(int(K), beta, base.n) for K in cfg.sweep_values}
    bad = [K for K, v in m_tx.items() if v is None]
    if bad:
        raise ConfigError(f"M_TX = beta*K/n is not an integer for K in {bad} (beta={beta}, n={base.n})")
    records = []
    for K, M_TX in m_tx.items():
        point = base.replace(K=K, M_TX=M_TX)
        for config in _settings(cfg, point):
            log.info("K=%d n=%d: %d trials", K, config.n, config.trials)
            records.append(run_point(config, cfg.P_dB, **kwargs))
    return records


def run_alpha_sweep(cfg: SweepConfig, **kwargs) -> list[ExperimentRecord]:
    """One record per (alpha, setting) at fixed n, K, M."""
    if cfg.sweep_variable != "alpha":
        raise ConfigError("run_alpha_sweep needs sweep_variable = 'alpha'")
    if not cfg.sweep_values:
        raise ConfigError("sweep_values is empty")
    bad = [a for a in cfg.sweep_values if not a > 0]
    if bad:
        raise ConfigError(f"alpha values must be > 0, offending: {bad}")
    records = []
    for alpha in cfg.sweep_values:
        point = cfg.base.replace(alpha=float(alpha))
        for config in _settings(cfg, point):
            records.append(run_point(config, cfg.P_dB, **kwargs))
    return records


@dataclass(frozen=True)
class OptimalAlpha:
    alpha_star: float
    rate_star: float
    bracket: tuple[float, float]

    @property
    def log_step(self) -> float:
        """Width of the final refinement bracket in natural-log alpha."""
        lo, hi = self.bracket
        return math.log(hi / lo) if lo > 0 else math.inf


def find_optimal_alpha(base: SystemConfig, grid: Sequence[float], refine_rounds: int = 20,
                       numerator_mode="squared", interference_form="rederived") -> OptimalAlpha:
    """Maximize the deterministic rate over alpha.

    Takes the grid argmax, then repeatedly evaluates the log-midpoints
    between the incumbent and its bracket ends, keeps the best of the three
    and halves the bracket. Bracket ends never leave the grid range.
    """
    grid = [float(a) for a in grid]
    if not grid:
        raise ConfigError("alpha grid is empty")
    if any(a <= 0 for a in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("alpha grid must be positive and strictly increasing")

    def rate(alpha):
        r = deterministic_equivalents(alpha, base.beta, base.P, base.sigma,
                                      numerator_mode, interference_form).rate
        return r if math.isfinite(r) else -math.inf

    rates = [rate(a) for a in grid]
    i = int(np.argmax(rates))
    best, best_rate = grid[i], rates[i]
    lo = grid[i - 1] if i > 0 else grid[i]
    hi = grid[i + 1] if i + 1 < len(grid) else grid[i]
    for _ in range(refine_rounds):
        left, right = math.sqrt(lo * best), math.sqrt(best * hi)
        r_left, r_right = rate(left), rate(right)
        if r_left > best_rate and r_left >= r_right:
            lo, hi, best, best_rate = lo, best, left, r_left
        elif r_right > best_rate:
            lo, hi, best, best_rate = best, hi, right, r_right
        else:
            lo, hi = left, right
    return OptimalAlpha(alpha_star=best, rate_star=best_rate, bracket=(lo, hi))


# --------------------------------------------------------------------------
# lemma suite
# --------------------------------------------------------------------------

_TIERS = {
    # fast: M <= 64, looser statistical tolerances
    "fast": dict(M=64, M_small=16, exact_cases=200, lemma7_samples=60, lemma7_tol=0.10,
                 lemma8_samples=1000, lemma8_tol=0.10, lemma6_samples=600, lemma6_tol=0.10,
                 psi_trials=60, psi_M=64, concentration_samples=400),
    "full": dict(M=256, M_small=64, exact_cases=1000, lemma7_samples=200, lemma7_tol=0.05,
                 lemma8_samples=2000, lemma8_tol=0.05, lemma6_samples=1500, lemma6_tol=0.05,
                 psi_trials=200, psi_M=128, concentration_samples=400),
}

LEMMA7_SIGMA_SQ = (0.0, 0.1, 0.5)


def _sub_seed(seed: int, *tag: int) -> int:
    return int(np.random.SeedSequence(int(seed), spawn_key=tag).generate_state(1, np.uint64)[0] >> 1)


def _exact_reports(n_cases: int, max_dim: int, seed: int) -> list[LemmaCheckReport]:
    worst_residual, worst_ratio, worst_literal = 0.0, 0.0, 0.0
    dims = []
    for c in range(n_cases):
        rng = trial_rng(seed, 10, c)
        M = int(rng.integers(2, max_dim + 1))
        K = int(rng.integers(1, M + 1))
        alpha = float(np.exp(rng.uniform(np.log(0.05), np.log(5.0))))
        H = complex_gaussian(rng, (K, M))
        k = int(rng.integers(0, K))
        A = rmt_lab.make_matrix(["identity", "unitary", "bounded", "hermitian"][c % 4], M, rng)
        worst_residual = max(worst_residual, rmt_lab.resolvent_identity_residual(H, k, alpha))
        value = abs(rmt_lab.rank1_perturbation(H, k, alpha, A))
        worst_ratio = max(worst_ratio, value / rmt_lab.rank1_bound(A, alpha))
        if alpha >= 1.0:
            worst_literal = max(worst_literal, value / np.linalg.norm(A, 2))
        dims.append(M)
    return [
        LemmaCheckReport("lemma2-resolvent", max(dims), n_cases, 0.0, worst_residual, worst_residual, 1e-9),
        LemmaCheckReport("lemma5-rank1[norm/alpha]", max(dims), n_cases, 1.0, worst_ratio,
                         worst_ratio, 1.0 + 1e-12),
        LemmaCheckReport("lemma5-rank1[norm, alpha>=1]", max(dims), n_cases, 1.0, worst_literal,
                         worst_literal, 1.0 + 1e-12),
    ]


def _relative(emp, ref, floor=1e-12):
    return abs(emp - ref) / max(abs(ref), floor)


def _trend_report(lemma_id, M, M_small, samples, errs_big, errs_small) -> LemmaCheckReport:
    """Pass iff the RMS relative error over all cases is smaller at ``M`` than at ``M_small``.

    Individual cases sit at the Monte Carlo noise floor, so the comparison
    is made on the aggregate.
    """
    rms_big = float(np.sqrt(np.mean(np.square(errs_big))))
    rms_small = float(np.sqrt(np.mean(np.square(errs_small))))
    ratio = rms_big / rms_small if rms_small > 0 else math.inf
    return LemmaCheckReport(lemma_id, M, samples, rms_small, rms_big, ratio, float(np.nextafter(1.0, 0.0)),
                            {"M_small": M_small, "per_case_shrinks": int(sum(b < a for b, a in zip(errs_big, errs_small))),
                             "cases": len(errs_big)})


def run_lemma_suite(tier: str = "fast", seed: int = 0) -> list[LemmaCheckReport]:
    """Run every lemma check at the sizes of ``tier`` ("fast": M <= 64, "full": M <= 256)."""
    if tier not in _TIERS:
        raise ConfigError(f"tier must be one of {sorted(_TIERS)}, got {tier!r}")
    t = _TIERS[tier]
    M, Ms = t["M"], t["M_small"]
    reports: list[LemmaCheckReport] = []

    reports += _exact_reports(t["exact_cases"], 64, _sub_seed(seed, 1))

    cs = t["concentration_samples"]
    for i, spec in enumerate(("identity", "zero", "diag_half", "hermitian")):
        reports.append(rmt_lab.trace_lemma_deviation(M, cs, spec, _sub_seed(seed, 2, i)))
        reports.append(rmt_lab.zero_lemma_deviation(M, cs, spec, _sub_seed(seed, 3, i)))
    reports.append(rmt_lab.trace_lemma_scaling(Ms, cs, "identity", _sub_seed(seed, 4)))
    reports.append(rmt_lab.theorem1_trace_deviation(M, 1.0, 0.1, "hermitian", 10, _sub_seed(seed, 5)))
    reports.append(rmt_lab.theorem1_trace_deviation(M, 2.0, 0.5, "diag", 10, _sub_seed(seed, 6)))

    # power normalization: mean psi against Gamma°
    alpha = 0.1
    cfg = SystemConfig(n=1, M_TX=t["psi_M"], K=t["psi_M"], P=10.0, alpha=alpha,
                       sigma=(math.sqrt(0.1),), base_seed=_sub_seed(seed, 7), trials=t["psi_trials"])
    mc = monte_carlo_rate(cfg)
    g0 = gamma0(fixed_point_delta(alpha, 1.0), 1.0)
    reports.append(LemmaCheckReport("psi-gamma0", cfg.M, cfg.trials, g0, mc.mean_psi[0],
                                    _relative(mc.mean_psi[0], g0), 0.05))

    # rank-two quadratic forms, generic coefficients
    c = (0.5, 0.3, 0.2)
    xx, xy, (u, up) = rmt_lab.lemma6_oracle(*c, "diag", "pd", M, t["lemma6_samples"], _sub_seed(seed, 8))
    fxx, fxy = rmt_lab.lemma6_quadform_equiv(*c, u, up)
    for name, emp, ref in (("xx", xx, fxx), ("xy", xy, fxy)):
        reports.append(LemmaCheckReport(f"lemma6-{name}", M, t["lemma6_samples"], ref, emp.mean,
                                        _relative(emp.mean, ref), t["lemma6_tol"], {"stderr": emp.stderr}))

    # cross-resolvent trace, all sigma pairs, plus shrinkage from M_small to M.
    # The small-M runs get M/M_small times more draws so that the comparison
    # is between finite-size biases rather than between noise levels.
    boost = M // Ms
    errs_big, errs_small = [], []
    for a, s1 in enumerate(LEMMA7_SIGMA_SQ):
        for b, s2 in enumerate(LEMMA7_SIGMA_SQ):
            sp, spp = math.sqrt(s1), math.sqrt(s2)
            y0 = rmt_lab.lemma7_y0(sp, spp, alpha, 1.0)
            big = rmt_lab.lemma7_oracle(sp, spp, alpha, 1.0, M, t["lemma7_samples"], _sub_seed(seed, 9, a, b))
            small = rmt_lab.lemma7_oracle(sp, spp, alpha, 1.0, Ms, boost * t["lemma7_samples"],
                                          _sub_seed(seed, 10, a, b))
            err_big, err_small = _relative(big.mean, y0), _relative(small.mean, y0)
            errs_big.append(err_big)
            errs_small.append(err_small)
            reports.append(LemmaCheckReport(
                f"lemma7[s2={s1},{s2}]", M, t["lemma7_samples"], y0, big.mean, err_big, t["lemma7_tol"],
                {"stderr": big.stderr, f"rel_error_M{Ms}": err_small},
            ))
    reports.append(_trend_report("lemma7-trend", M, Ms, t["lemma7_samples"], errs_big, errs_small))

    q = derive_csit_quality(math.sqrt(0.1))
    errs = {}
    for dim, tag, samples in ((M, 11, t["lemma8_samples"]), (Ms, 12, boost * t["lemma8_samples"])):
        est = rmt_lab.lemma8_oracle("identity", "identity", "identity", q.c0, q.c1, q.c2, dim,
                                    samples, _sub_seed(seed, tag))
        fxx, fxy = rmt_lab.lemma8_equiv(*est.traces, q.c0, q.c1, q.c2)
        errs[dim] = []
        for name, emp, ref in (("xx", est.xx, fxx), ("xy", est.xy, fxy)):
            err = _relative(emp.mean, ref)
            errs[dim].append(err)
            if dim == M:
                reports.append(LemmaCheckReport(f"lemma8-{name}", M, t["lemma8_samples"], ref, emp.mean,
                                                err, t["lemma8_tol"],
                                                {"stderr": emp.stderr, "resampled": est.resampled}))
    reports.append(_trend_report("lemma8-trend", M, Ms, t["lemma8_samples"], errs[M], errs[Ms]))
    return reports
