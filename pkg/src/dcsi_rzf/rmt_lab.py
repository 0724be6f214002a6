"""Executable random-matrix lemmas paired with exact or Monte Carlo oracles.

Conventions used throughout:

* resolvents carry the 1/M Gram normalization, ``Q = (HᴴH/M + αI)⁻¹``;
* row indices ``k`` are 0-based;
* random vectors have i.i.d. CN(0, 1) entries and rank-one/rank-two updates
  are scaled by 1/M (equivalent to variance-1/M vectors without the scaling).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Literal, NamedTuple, Union

import numpy as np

from .channel import complex_gaussian, trial_rng
from .detequiv import fixed_point_delta
from .errors import DomainError, InvalidInputError
from .numerics import as_complex_matrix, regularized_gram_inverse

__all__ = [
    "LemmaCheckReport",
    "Estimate",
    "Lemma8Estimate",
    "MATRIX_SPECS",
    "make_matrix",
    "resolvent_identity_residual",
    "rank1_perturbation",
    "rank1_perturbation_bound",
    "rank1_bound",
    "trace_lemma_deviation",
    "trace_lemma_scaling",
    "zero_lemma_deviation",
    "theorem1_trace_deviation",
    "lemma6_quadform_equiv",
    "lemma6_oracle",
    "lemma7_y0",
    "lemma7_general",
    "lemma7_oracle",
    "lemma8_equiv",
    "lemma8_matrices",
    "lemma8_traces",
    "lemma8_oracle",
]

# stream tags for trial_rng
_FIXED = 0
_SAMPLE = 1


def _fmt(v):
    if isinstance(v, complex) or np.iscomplexobj(v):
        v = complex(v)
        return v.real if v.imag == 0 else [v.real, v.imag]
    return float(v)


@dataclass(frozen=True)
class LemmaCheckReport:
    """Outcome of one lemma check; ``passed`` is derived from the errors."""

    lemma_id: str
    dimension: int
    samples: int
    formula_value: Union[float, complex]
    empirical_value: Union[float, complex]
    rel_error: float
    tolerance: float
    detail: dict = field(default_factory=dict)
    passed: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "passed", bool(self.rel_error <= self.tolerance))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["formula_value"] = _fmt(self.formula_value)
        d["empirical_value"] = _fmt(self.empirical_value)
        d["rel_error"] = float(self.rel_error)
        d["tolerance"] = float(self.tolerance)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


class Estimate(NamedTuple):
    mean: Union[float, complex]
    stderr: float
    samples: int


def _estimate(values) -> Estimate:
    values = np.asarray(values)
    n = values.size
    mean = values.mean()
    se = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    mean = complex(mean) if np.iscomplexobj(values) else float(mean)
    return Estimate(mean, se, n)


# --------------------------------------------------------------------------
# deterministic test matrices
# --------------------------------------------------------------------------

def _identity(M, rng):
    return np.eye(M, dtype=np.complex128)


def _zero(M, rng):
    return np.zeros((M, M), dtype=np.complex128)


def _diag_half(M, rng):
    # diagonal with tr(A)/M = 0.5 exactly
    return np.diag(np.linspace(0.0, 1.0, M)).astype(np.complex128)


def _diag(M, rng):
    return np.diag(rng.uniform(0.5, 2.0, M)).astype(np.complex128)


def _unitary(M, rng):
    Z = complex_gaussian(rng, (M, M))
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def _bounded(M, rng):
    Z = complex_gaussian(rng, (M, M))
    return Z / np.linalg.norm(Z, 2)


def _hermitian(M, rng):
    Z = complex_gaussian(rng, (M, M))
    Hm = 0.5 * (Z + Z.conj().T)
    return Hm / np.linalg.norm(Hm, 2)


def _pd(M, rng):
    B = _bounded(M, rng)
    return np.eye(M) + 0.5 * (B @ B.conj().T)


MATRIX_SPECS: dict[str, Callable[[int, np.random.Generator], np.ndarray]] = {
    "identity": _identity,
    "zero": _zero,
    "diag_half": _diag_half,
    "diag": _diag,
    "unitary": _unitary,
    "bounded": _bounded,
    "hermitian": _hermitian,
    "pd": _pd,
}

MatrixSpec = Union[str, Callable[[int, np.random.Generator], np.ndarray], np.ndarray]


def make_matrix(spec: MatrixSpec, M: int, rng: np.random.Generator) -> np.ndarray:
    """Materialize an M×M test matrix from a name, a generator or an array."""
    if isinstance(spec, str):
        try:
            gen = MATRIX_SPECS[spec]
        except KeyError:
            raise InvalidInputError(f"unknown matrix spec {spec!r}; choose from {sorted(MATRIX_SPECS)}") from None
        return gen(M, rng)
    if callable(spec):
        A = np.asarray(spec(M, rng), dtype=np.complex128)
    else:
        A = np.asarray(spec, dtype=np.complex128)
    if A.shape != (M, M):
        raise InvalidInputError(f"matrix spec produced shape {A.shape}, expected {(M, M)}")
    return A


def _spec_name(spec) -> str:
    return spec if isinstance(spec, str) else getattr(spec, "__name__", "custom")


# --------------------------------------------------------------------------
# exact identities
# --------------------------------------------------------------------------

def _resolvent_pair(H, k, alpha):
    H = as_complex_matrix(H, "H")
    K, M = H.shape
    if not 0 <= k < K:
        raise IndexError(f"row index {k} out of range for K={K}")
    if not alpha > 0:
        raise DomainError(f"alpha must be > 0, got {alpha}")
    eye = np.eye(M)
    Hk = np.delete(H, k, axis=0)
    Q = np.linalg.inv(H.conj().T @ H / M + alpha * eye)
    Qk = np.linalg.inv(Hk.conj().T @ Hk / M + alpha * eye)
    return H, Q, Qk


def resolvent_identity_residual(H, k: int, alpha: float) -> float:
    """Max entrywise residual of the rank-one resolvent identities.

    Checks both ``Q = Q_k − (1/M) Q_k h hᴴ Q_k / (1 + hᴴQ_k h/M)`` and
    ``hᴴ Q = hᴴ Q_k / (1 + hᴴQ_k h/M)``, with Q and Q_k inverted directly.
    """
    H, Q, Qk = _resolvent_pair(H, k, alpha)
    M = H.shape[1]
    h = H[k].conj()  # column vector h_k, so that row k of H is h_kᴴ
    Qh = Qk @ h
    denom = 1.0 + np.vdot(h, Qh).real / M
    sm = Qk - np.outer(Qh, Qh.conj()) / (M * denom)
    row = h.conj() @ Qk / denom
    return float(max(np.max(np.abs(Q - sm)), np.max(np.abs(h.conj() @ Q - row))))


def rank1_perturbation(H, k: int, alpha: float, A) -> complex:
    """``tr(A (Q − Q_k))``."""
    H, Q, Qk = _resolvent_pair(H, k, alpha)
    A = as_complex_matrix(A, "A")
    if A.shape != Q.shape:
        raise InvalidInputError(f"A must be {Q.shape}, got {A.shape}")
    return complex(np.sum(A * (Q - Qk).T))


def rank1_bound(A, alpha: float) -> float:
    """Spectral bound ``‖A‖₂ / α`` on ``|tr(A(Q − Q_k))|``.

    The 1/α factor is the distance of −α from the spectrum; it equals the
    frequently quoted ``‖A‖₂`` at α = 1 and is needed for α < 1.
    """
    return float(np.linalg.norm(np.asarray(A), 2)) / alpha


def rank1_perturbation_bound(H, k: int, alpha: float, A) -> complex:
    """Return ``tr(A(Q − Q_k))``, raising AssertionError if it exceeds the bound."""
    value = rank1_perturbation(H, k, alpha, A)
    bound = rank1_bound(A, alpha)
    if abs(value) > bound * (1 + 1e-12):
        raise AssertionError(f"|tr(A(Q-Q_k))| = {abs(value)} exceeds ||A||_2/alpha = {bound}")
    return value


# --------------------------------------------------------------------------
# concentration lemmas
# --------------------------------------------------------------------------

def _quadratic_samples(A, X, Y):
    return np.einsum("si,ij,sj->s", X.conj(), A, Y) / A.shape[0]


def trace_lemma_deviation(M: int, samples: int, A_spec: MatrixSpec = "identity", seed: int = 0,
                          tolerance: float | None = None) -> LemmaCheckReport:
    """Deviation of ``xᴴAx/M`` from ``tr(A)/M``.

    The reported error is the RMS deviation over samples; the default
    tolerance ``1.6‖A‖_F/M`` is 1.6 times its theoretical value.
    """
    if M < 2:
        raise DomainError("M must be >= 2")
    A = make_matrix(A_spec, M, trial_rng(seed, _FIXED))
    X = complex_gaussian(trial_rng(seed, _SAMPLE), (samples, M))
    target = complex(np.trace(A)) / M
    dev = _quadratic_samples(A, X, X) - target
    rms = float(np.sqrt(np.mean(np.abs(dev) ** 2)))
    if tolerance is None:
        tolerance = 1.6 * float(np.linalg.norm(A)) / M
    est = _estimate(dev + target)
    return LemmaCheckReport(
        lemma_id=f"lemma3-trace[{_spec_name(A_spec)}]",
        dimension=M,
        samples=samples,
        formula_value=target,
        empirical_value=est.mean,
        rel_error=rms,
        tolerance=tolerance,
        detail={"max_abs_deviation": float(np.max(np.abs(dev))), "stderr": est.stderr},
    )


def trace_lemma_scaling(M: int, samples: int, A_spec: MatrixSpec = "identity", seed: int = 0,
                        tolerance: float = 0.15) -> LemmaCheckReport:
    """Ratio of RMS deviations at 4M and M; expected 1/2 (1/√M decay)."""
    small = trace_lemma_deviation(M, samples, A_spec, seed)
    large = trace_lemma_deviation(4 * M, samples, A_spec, seed + 1)
    ratio = large.rel_error / small.rel_error if small.rel_error > 0 else 0.0
    return LemmaCheckReport(
        lemma_id=f"lemma3-scaling[{_spec_name(A_spec)}]",
        dimension=4 * M,
        samples=samples,
        formula_value=0.5,
        empirical_value=ratio,
        rel_error=abs(ratio - 0.5),
        tolerance=tolerance,
        detail={"rms_M": small.rel_error, "rms_4M": large.rel_error},
    )


def zero_lemma_deviation(M: int, samples: int, A_spec: MatrixSpec = "identity", seed: int = 0,
                         tolerance: float | None = None) -> LemmaCheckReport:
    """Deviation of ``xᴴAy/M`` from 0 for independent x, y (RMS over samples)."""
    if M < 2:
        raise DomainError("M must be >= 2")
    A = make_matrix(A_spec, M, trial_rng(seed, _FIXED))
    rng = trial_rng(seed, _SAMPLE)
    X = complex_gaussian(rng, (samples, M))
    Y = complex_gaussian(rng, (samples, M))
    vals = _quadratic_samples(A, X, Y)
    rms = float(np.sqrt(np.mean(np.abs(vals) ** 2)))
    if tolerance is None:
        tolerance = 1.6 * float(np.linalg.norm(A)) / M
    est = _estimate(vals)
    return LemmaCheckReport(
        lemma_id=f"lemma4-zero[{_spec_name(A_spec)}]",
        dimension=M,
        samples=samples,
        formula_value=0.0,
        empirical_value=est.mean,
        rel_error=rms,
        tolerance=tolerance,
        detail={
            "max_abs": float(np.max(np.abs(vals))),
            "stderr": est.stderr,
            "fraction_below_0.25": float(np.mean(np.abs(vals) < 0.25)),
        },
    )


def theorem1_trace_deviation(M: int, beta: float, alpha: float, U_spec: MatrixSpec = "hermitian",
                             samples: int = 20, seed: int = 0, tolerance: float = 0.02) -> LemmaCheckReport:
    """``tr(UQ)/M`` against ``tr(U Q_o)/M`` with ``Q_o = δ I``.

    The error is ``|mean - target| / (δ‖U‖₂)``.
    """
    K = M / beta
    if abs(K - round(K)) > 1e-9:
        raise DomainError(f"M/beta = {K} is not an integer")
    K = int(round(K))
    delta = fixed_point_delta(alpha, beta)
    U = make_matrix(U_spec, M, trial_rng(seed, _FIXED))
    target = delta * complex(np.trace(U)) / M
    vals = []
    for s in range(samples):
        H = complex_gaussian(trial_rng(seed, _SAMPLE, s), (K, M))
        Q = regularized_gram_inverse(H, alpha)
        vals.append(complex(np.sum(U * Q.T)) / M)
    est = _estimate(vals)
    # deviation measured on the scale of the operand, since tr(U) may vanish
    scale = delta * float(np.linalg.norm(U, 2))
    return LemmaCheckReport(
        lemma_id=f"theorem1-trace[{_spec_name(U_spec)}]",
        dimension=M,
        samples=samples,
        formula_value=target,
        empirical_value=est.mean,
        rel_error=abs(est.mean - target) / scale,
        tolerance=tolerance,
        detail={"delta": delta, "stderr": est.stderr},
    )


# --------------------------------------------------------------------------
# quadratic forms with rank-two updates
# --------------------------------------------------------------------------

def _check_coefficients(c0, c1, c2, *, boundary_only=False, tol=1e-12):
    if min(c0, c1, c2) < 0:
        raise DomainError(f"coefficients must be non-negative, got {(c0, c1, c2)}")
    gap = c0 * c1 - c2 * c2
    if boundary_only:
        if abs(c0 + c1 - 1.0) > tol or abs(gap) > tol:
            raise DomainError(f"need c0 + c1 = 1 and c0 c1 = c2^2, got {(c0, c1, c2)}")
    elif gap < -tol:
        raise DomainError(f"need c0 c1 - c2^2 >= 0, got {gap}")


def lemma6_quadform_equiv(c0: float, c1: float, c2: float, u: float, u_prime: float) -> tuple[float, float]:
    """Limits of ``xᴴU A⁻¹ x`` and ``xᴴU A⁻¹ y`` for ``A = V + rank-two(x, y)``."""
    _check_coefficients(c0, c1, c2)
    denominator = (c0 * c1 - c2 * c2) * u * u + (c0 + c1) * u + 1.0
    if denominator <= 0:
        raise DomainError(f"non-positive denominator {denominator}")
    return u_prime * (1.0 + c1 * u) / denominator, -c2 * u * u_prime / denominator


def _rank2(x, y, c0, c1, c2, M):
    return (c0 * np.outer(x, x.conj()) + c1 * np.outer(y, y.conj())
            + c2 * np.outer(x, y.conj()) + c2 * np.outer(y, x.conj())) / M


def lemma6_oracle(c0, c1, c2, U_spec: MatrixSpec, V_spec: MatrixSpec, M: int, samples: int,
                  seed: int = 0) -> tuple[Estimate, Estimate, tuple[float, float]]:
    """Monte Carlo ``(xᴴUA⁻¹x/M, xᴴUA⁻¹y/M)`` and the traces ``(u, u')``."""
    _check_coefficients(c0, c1, c2)
    rng = trial_rng(seed, _FIXED)
    U = make_matrix(U_spec, M, rng)
    V = make_matrix(V_spec, M, rng)
    Vinv = np.linalg.inv(V)
    u = float(np.trace(Vinv).real) / M
    u_prime = float(np.trace(U @ Vinv).real) / M
    xx, xy = [], []
    for s in range(samples):
        r = trial_rng(seed, _SAMPLE, s)
        x = complex_gaussian(r, M)
        y = complex_gaussian(r, M)
        A = V + _rank2(x, y, c0, c1, c2, M)
        Z = np.linalg.solve(A, np.column_stack([x, y]))
        left = x.conj() @ U
        xx.append(left @ Z[:, 0] / M)
        xy.append(left @ Z[:, 1] / M)
    return _estimate(xx), _estimate(xy), (u, u_prime)


def _y0(delta, beta, coupling):
    ratio = delta * delta / (1.0 + delta) ** 2
    denominator = 1.0 - coupling * ratio / beta
    if denominator <= 0:
        raise DomainError(f"non-positive denominator {denominator}")
    bracket = (1.0 - delta) + delta * delta / (1.0 + delta)
    return math.sqrt(coupling) * delta * delta / (beta * (1.0 + delta)) * bracket / denominator


def lemma7_y0(sigma_p: float, sigma_pp: float, alpha: float, beta: float) -> float:
    """Deterministic equivalent Y₀ of ``tr(Q'H'ᴴH''Q'')/M²`` for two estimates."""
    for s in (sigma_p, sigma_pp):
        if not 0.0 <= s <= 1.0:
            raise DomainError(f"sigma must lie in [0, 1], got {s}")
    delta = fixed_point_delta(alpha, beta)
    return _y0(delta, beta, (1.0 - sigma_p ** 2) * (1.0 - sigma_pp ** 2))


def lemma7_general(trace_A_over_M: float, sigma_p: float, sigma_pp: float, alpha: float, beta: float) -> float:
    """General-A form, closed through the A = I value Y₀."""
    delta = fixed_point_delta(alpha, beta)
    root = math.sqrt((1.0 - sigma_p ** 2) * (1.0 - sigma_pp ** 2))
    y0 = lemma7_y0(sigma_p, sigma_pp, alpha, beta)
    return (trace_A_over_M * delta * delta * root / (beta * (1.0 + delta))
            * ((1.0 - delta) + (delta * delta + root * y0) / (1.0 + delta)))


def lemma7_oracle(sigma_p: float, sigma_pp: float, alpha: float, beta: float, M: int, samples: int,
                  seed: int = 0) -> Estimate:
    """Monte Carlo mean of ``tr(Q'H'ᴴH''Q'')/M²`` with independent estimate noises."""
    K = M / beta
    if abs(K - round(K)) > 1e-9 or K < 1:
        raise DomainError(f"K = M/beta = {K} must be a positive integer")
    K = int(round(K))
    a_p, a_pp = math.sqrt(1.0 - sigma_p ** 2), math.sqrt(1.0 - sigma_pp ** 2)
    vals = []
    for s in range(samples):
        r = trial_rng(seed, _SAMPLE, s)
        H = complex_gaussian(r, (K, M))
        H1 = a_p * H + sigma_p * complex_gaussian(r, (K, M))
        H2 = a_pp * H + sigma_pp * complex_gaussian(r, (K, M))
        B1 = H1 @ regularized_gram_inverse(H1, alpha)
        B2 = H2 @ regularized_gram_inverse(H2, alpha)
        # tr(Q1 H1ᴴ H2 Q2) = <H1 Q1, H2 Q2>_F since Q1 is Hermitian
        vals.append(np.vdot(B1, B2).real / M ** 2)
    return _estimate(vals)


def lemma8_equiv(u: float, u_L: float, u_R: float, u_LR: float, c0: float, c1: float, c2: float,
                 form: Literal["corrected", "printed"] = "corrected") -> tuple[float, float]:
    """Limits of ``xᴴL A⁻¹ R x/M`` and ``xᴴL A⁻¹ R y/M`` under c0 + c1 = 1, c0c1 = c2².

    ``form="printed"`` keeps a leading ``u_LR`` in the cross form; the
    unperturbed cross term ``xᴴLĀ⁻¹Ry/M`` vanishes, so the corrected form
    drops it.
    """
    _check_coefficients(c0, c1, c2, boundary_only=True)
    p = u_L * u_R
    xx = u_LR - c0 * p * (1.0 + c1 * u) / (1.0 + u) + c2 * c2 * p * u / (1.0 + u)
    xy = c1 * c2 * p * u / (1.0 + u) - c2 * p * (1.0 + c1 * u) / (1.0 + u)
    if form == "printed":
        xy += u_LR
    elif form != "corrected":
        raise DomainError(f"unknown form {form!r}")
    return xx, xy


def lemma8_matrices(L_spec: MatrixSpec, R_spec: MatrixSpec, A_bar_spec: MatrixSpec, M: int,
                    seed: int = 0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rng = trial_rng(seed, _FIXED)
    return make_matrix(L_spec, M, rng), make_matrix(R_spec, M, rng), make_matrix(A_bar_spec, M, rng)


def lemma8_traces(L, R, A_bar) -> tuple[float, float, float, float]:
    """``(u, u_L, u_R, u_LR)`` normalized traces (real parts)."""
    M = A_bar.shape[0]
    inv = np.linalg.inv(A_bar)
    return (
        float(np.trace(inv).real) / M,
        float(np.trace(L @ inv).real) / M,
        float(np.trace(inv @ R).real) / M,
        float(np.trace(L @ inv @ R).real) / M,
    )


class Lemma8Estimate(NamedTuple):
    xx: Estimate
    xy: Estimate
    traces: tuple[float, float, float, float]
    resampled: int


def lemma8_oracle(L_spec: MatrixSpec, R_spec: MatrixSpec, A_bar_spec: MatrixSpec, c0: float, c1: float,
                  c2: float, M: int, samples: int, seed: int = 0) -> Lemma8Estimate:
    """Monte Carlo estimate of both quadratic forms of the rank-two lemma."""
    _check_coefficients(c0, c1, c2, boundary_only=True)
    L, R, A_bar = lemma8_matrices(L_spec, R_spec, A_bar_spec, M, seed)
    xx, xy = [], []
    resampled = 0
    s = 0
    while len(xx) < samples:
        r = trial_rng(seed, _SAMPLE, s)
        s += 1
        x = complex_gaussian(r, M)
        y = complex_gaussian(r, M)
        A = A_bar + _rank2(x, y, c0, c1, c2, M)
        try:
            Z = np.linalg.solve(A, R @ np.column_stack([x, y]))
        except np.linalg.LinAlgError:
            resampled += 1
            continue
        left = x.conj() @ L
        xx.append(left @ Z[:, 0] / M)
        xy.append(left @ Z[:, 1] / M)
    return Lemma8Estimate(_estimate(xx), _estimate(xy), lemma8_traces(L, R, A_bar), resampled)
