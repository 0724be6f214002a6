"""Large-system deterministic equivalents of the D-CSI regularized ZF SINR.

All quantities depend on the network only through α, β = M/K, P and the
per-TX estimate qualities σ⁽ʲ⁾.

Interference forms
------------------
``interference_det`` supports three forms of I_k°:

``"printed"``
    The closed form taken term by term, including the
    ``δ⁴(−σ⁶ + σ⁸) + σ⁵√(1−σ²)√(σ²−σ⁴)`` leftovers and the cross-TX bracket
    ``−2 + σⱼ² + σⱼ'² + δ(−1 + σⱼ² + σⱼ'²)``.
``"cancelled"``
    As printed, but with the σ⁵ term carrying the same δ⁴ factor so the
    σ⁶/σ⁸ leftovers cancel exactly.
``"rederived"`` (default)
    ``Σⱼ Γ°[n + (2δ+δ²)(n−1+σⱼ²)] / (n²(1+δ)²)
    + Σ_{j≠j'} Γ°ⱼⱼ' δ[−2 + σⱼ² + σⱼ'² + δ(−1 + σⱼ²σⱼ'²)] / (n²(1+δ)²)``.
    Obtained by expanding h_k = √c0 ĥ_k + σ w_k in each TX's resolvent;
    it is the form that tracks Monte Carlo (see README, "Formula audit").

All three coincide when every σ⁽ʲ⁾ ∈ {0, 1}. For n = 1 there are no cross
terms and, since σ⁵√(1−σ²)√(σ²−σ⁴) = σ⁶ − σ⁸, ``"cancelled"`` equals
``"rederived"`` exactly while ``"printed"`` differs by its leftover.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .channel import SystemConfig
from .errors import ConvergenceError, DomainError

__all__ = [
    "DetEquivalents",
    "InterferenceTerms",
    "fixed_point_delta",
    "delta_closed_form",
    "fixed_point_residual",
    "gamma0",
    "gamma_pair",
    "build_gamma_matrix",
    "interference_terms",
    "interference_det",
    "signal_numerator",
    "deterministic_equivalents",
    "sinr_det",
    "INTERFERENCE_FORMS",
    "NUMERATOR_MODES",
]

log = logging.getLogger(__name__)

NumeratorMode = Literal["squared", "literal"]
InterferenceForm = Literal["rederived", "printed", "cancelled"]
NUMERATOR_MODES = ("squared", "literal")
INTERFERENCE_FORMS = ("rederived", "printed", "cancelled")

MAX_ITER = 100_000
ITER_TOL = 1e-13


def _check_alpha_beta(alpha: float, beta: float) -> None:
    if not (alpha > 0 and math.isfinite(alpha)):
        raise DomainError(f"alpha must be > 0, got {alpha}")
    if not (beta >= 1 and math.isfinite(beta)):
        raise DomainError(f"beta must be >= 1, got {beta}")


def _check_sigma(sigma: float) -> float:
    sigma = float(sigma)
    if not 0.0 <= sigma <= 1.0:
        raise DomainError(f"sigma must lie in [0, 1], got {sigma}")
    return sigma


def fixed_point_residual(delta: float, alpha: float, beta: float) -> float:
    return abs(delta - 1.0 / (alpha + 1.0 / (beta * (1.0 + delta))))


def fixed_point_delta(alpha: float, beta: float, max_iter: int = MAX_ITER, tol: float = ITER_TOL) -> float:
    """Solve ``δ = 1 / (α + 1/(β(1+δ)))`` by fixed-point iteration from ``δ₀ = 1/α``.

    The map is a contraction on (0, ∞), so the iterates converge
    monotonically; ``ConvergenceError`` is raised only if ``max_iter`` is hit.
    """
    _check_alpha_beta(alpha, beta)
    delta = 1.0 / alpha
    for _ in range(max_iter):
        nxt = 1.0 / (alpha + 1.0 / (beta * (1.0 + delta)))
        # absolute threshold, floored at float resolution for very large δ
        if abs(nxt - delta) <= max(tol, 4.0 * np.finfo(float).eps * nxt):
            return nxt
        delta = nxt
    raise ConvergenceError(f"fixed point did not converge in {max_iter} iterations (alpha={alpha}, beta={beta})")


def delta_closed_form(alpha: float, beta: float) -> float:
    """Positive root of ``αβδ² + (αβ + 1 − β)δ − β = 0``."""
    _check_alpha_beta(alpha, beta)
    a = alpha * beta
    b = alpha * beta + 1.0 - beta
    disc = math.sqrt(b * b + 4.0 * a * beta)
    # avoid cancellation when b > 0
    if b > 0:
        return 2.0 * beta / (b + disc)
    return (disc - b) / (2.0 * a)


def _gamma_core(delta: float, beta: float, coupling: float) -> float:
    """Shared form of Γ° (coupling = 1) and Γ°ⱼⱼ' (coupling = c0ⱼ c0ⱼ')."""
    if not (delta > 0 and math.isfinite(delta)):
        raise DomainError(f"delta must be > 0, got {delta}")
    if not beta > 0:
        raise DomainError(f"beta must be > 0, got {beta}")
    ratio = delta * delta / (1.0 + delta) ** 2
    denominator = 1.0 - coupling * ratio / beta
    if denominator <= 0.0:
        raise DomainError(f"non-positive denominator {denominator} for delta={delta}, beta={beta}")
    bracket = (1.0 - delta) + delta * delta / (1.0 + delta)
    numerator = math.sqrt(coupling) * delta * delta / (beta * (1.0 + delta)) * bracket
    return numerator / denominator


def gamma0(delta: float, beta: float) -> float:
    """Deterministic equivalent of the power normalization ψ⁽ʲ⁾."""
    return _gamma_core(delta, beta, 1.0)


def gamma_pair(delta: float, beta: float, sigma_j: float, sigma_jp: float) -> float:
    """Cross-TX trace equivalent Γ°ⱼⱼ' for two *distinct* TXs.

    Use :func:`build_gamma_matrix` for whole matrices: on the diagonal the
    two estimates coincide and the value is Γ°, not this formula.
    """
    sj, sjp = _check_sigma(sigma_j), _check_sigma(sigma_jp)
    coupling = (1.0 - sj * sj) * (1.0 - sjp * sjp)
    return _gamma_core(delta, beta, coupling)


def build_gamma_matrix(n: int, sigmas: Sequence[float], delta: float, beta: float) -> np.ndarray:
    """n×n matrix of Γ°ⱼⱼ' with the diagonal set to Γ°."""
    if len(sigmas) != n:
        raise DomainError(f"expected {n} sigma values, got {len(sigmas)}")
    g0 = gamma0(delta, beta)
    out = np.empty((n, n))
    for j in range(n):
        out[j, j] = g0
        for jp in range(j + 1, n):
            out[j, jp] = out[jp, j] = gamma_pair(delta, beta, sigmas[j], sigmas[jp])
    return out


@dataclass(frozen=True)
class InterferenceTerms:
    """Additive pieces of I_k°, kept separate so each can be inspected."""

    form: str
    diagonal: tuple[float, ...]
    leftover: tuple[float, ...]
    cross: dict[tuple[int, int], float]

    @property
    def total(self) -> float:
        return sum(self.diagonal) + sum(self.leftover) + sum(self.cross.values())


def interference_terms(
    delta: float,
    beta: float,
    sigmas: Sequence[float],
    form: InterferenceForm = "rederived",
) -> InterferenceTerms:
    if form not in INTERFERENCE_FORMS:
        raise DomainError(f"unknown interference form {form!r}")
    sigmas = [_check_sigma(s) for s in sigmas]
    n = len(sigmas)
    if n < 1:
        raise DomainError("need at least one TX")
    gam = build_gamma_matrix(n, sigmas, delta, beta)
    g0 = gam[0, 0]
    d = delta
    scale = 1.0 / ((1.0 + d) ** 2 * n * n)

    diagonal, leftover = [], []
    for s in sigmas:
        s2 = s * s
        main = n + 2.0 * d * (-1.0 + n + s2) + d * d * (-1.0 + n + s2)
        diagonal.append(g0 * scale * main)
        sigma5_term = s ** 5 * math.sqrt(1.0 - s2) * math.sqrt(max(s2 - s2 * s2, 0.0))
        quartic = d ** 4 * (-(s2 ** 3) + s2 ** 4)
        if form == "printed":
            extra = quartic + sigma5_term
        elif form == "cancelled":
            extra = quartic + d ** 4 * sigma5_term
        else:
            extra = 0.0
        leftover.append(g0 * scale * extra)

    cross = {}
    for j in range(n):
        for jp in range(n):
            if j == jp:
                continue
            sj2, sjp2 = sigmas[j] ** 2, sigmas[jp] ** 2
            if form == "rederived":
                bracket = -2.0 + sj2 + sjp2 + d * (-1.0 + sj2 * sjp2)
            else:
                bracket = -2.0 + sj2 + sjp2 + d * (-1.0 + sj2 + sjp2)
            cross[(j, jp)] = gam[j, jp] * d * scale * bracket

    terms = InterferenceTerms(form=form, diagonal=tuple(diagonal), leftover=tuple(leftover), cross=cross)
    if log.isEnabledFor(logging.DEBUG):
        for j, (a, b) in enumerate(zip(terms.diagonal, terms.leftover)):
            log.debug("I_k[%s] TX %d: diagonal=%.12g leftover=%.12g", form, j, a, b)
        for (j, jp), v in terms.cross.items():
            log.debug("I_k[%s] pair (%d,%d): %.12g", form, j, jp, v)
    return terms


def interference_det(
    delta: float,
    beta: float,
    sigmas: Sequence[float],
    n: int | None = None,
    form: InterferenceForm = "rederived",
) -> float:
    """Deterministic equivalent I_k° of the scaled interference power.

    Equals the interference Σ_{ℓ≠k}|h_kᴴ t_ℓ|² times Γ°/P in the large-system
    limit; it does not depend on the user index k.
    """
    if n is not None and n != len(sigmas):
        raise DomainError(f"n={n} does not match {len(sigmas)} sigma values")
    return interference_terms(delta, beta, sigmas, form).total


def signal_numerator(delta: float, sigmas: Sequence[float], mode: NumeratorMode = "squared") -> float:
    mean_amp = float(np.mean([math.sqrt(1.0 - _check_sigma(s) ** 2) for s in sigmas]))
    kappa = delta / (1.0 + delta)
    if mode == "squared":
        return mean_amp ** 2 * kappa ** 2
    if mode == "literal":
        return mean_amp * kappa
    raise DomainError(f"unknown numerator mode {mode!r}")


@dataclass(frozen=True)
class DetEquivalents:
    delta: float
    gamma0: float
    gamma_pair: np.ndarray
    interference: float
    sinr: float
    rate: float
    numerator: float
    numerator_mode: str = "squared"
    interference_form: str = "rederived"

    def as_dict(self) -> dict:
        return {
            "delta": self.delta,
            "gamma0": self.gamma0,
            "gamma_pair": self.gamma_pair.tolist(),
            "interference": self.interference,
            "numerator": self.numerator,
            "sinr": self.sinr,
            "rate": self.rate,
            "numerator_mode": self.numerator_mode,
            "interference_form": self.interference_form,
        }


def deterministic_equivalents(
    alpha: float,
    beta: float,
    P: float,
    sigmas: Sequence[float],
    numerator_mode: NumeratorMode = "squared",
    interference_form: InterferenceForm = "rederived",
) -> DetEquivalents:
    """SINR° = N / (I_k° + Γ°/P) and rate log₂(1 + SINR°) from raw parameters."""
    if not (P > 0 and math.isfinite(P)):
        raise DomainError(f"P must be > 0, got {P}")
    sigmas = [_check_sigma(s) for s in sigmas]
    delta = fixed_point_delta(alpha, beta)
    gam = build_gamma_matrix(len(sigmas), sigmas, delta, beta)
    g0 = float(gam[0, 0])
    interference = float(interference_det(delta, beta, sigmas, form=interference_form))
    numerator = signal_numerator(delta, sigmas, numerator_mode)
    sinr = numerator / (interference + g0 / P)
    rate = math.log2(1.0 + sinr) if sinr > -1.0 else math.nan
    return DetEquivalents(
        delta=delta,
        gamma0=g0,
        gamma_pair=gam,
        interference=interference,
        sinr=sinr,
        rate=rate,
        numerator=numerator,
        numerator_mode=numerator_mode,
        interference_form=interference_form,
    )


def sinr_det(
    config: SystemConfig,
    numerator_mode: NumeratorMode = "squared",
    interference_form: InterferenceForm = "rederived",
) -> DetEquivalents:
    return deterministic_equivalents(
        config.alpha, config.beta, config.P, config.sigma, numerator_mode, interference_form
    )
