"""Dense complex linear-algebra kernels.

Matrices are plain 2-D ``numpy`` arrays of dtype ``complex128``. Inputs are
validated once at the public boundary through :func:`as_complex_matrix`.
"""

from __future__ import annotations

import numpy as np
from scipy import linalg as sla

from .errors import DomainError, InvalidInputError

__all__ = [
    "as_complex_matrix",
    "regularized_gram",
    "regularized_gram_inverse",
    "regularized_pseudo_inverse",
    "frobenius_norm_sq",
    "trace_product",
    "quadratic_form",
    "hermitian_part",
]


def as_complex_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return `a` as a finite 2-D complex128 array, or raise InvalidInputError."""
    arr = np.asarray(a)
    if arr.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInputError(f"{name} must be at least 1x1, got shape {arr.shape}")
    arr = arr.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return arr


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not np.isfinite(alpha) or alpha <= 0.0:
        raise DomainError(f"regularization alpha must be > 0, got {alpha}")
    return alpha


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


def regularized_gram(H: np.ndarray, alpha: float) -> np.ndarray:
    """``Hᴴ H / M + α I_M`` for a K×M matrix ``H``."""
    H = as_complex_matrix(H, "H")
    alpha = _check_alpha(alpha)
    M = H.shape[1]
    G = H.conj().T @ H / M
    G[np.diag_indices(M)] += alpha
    return hermitian_part(G)


def regularized_gram_inverse(H_hat, alpha: float) -> np.ndarray:
    """Resolvent ``(Ĥᴴ Ĥ / M + α I_M)⁻¹``.

    Parameters
    ----------
    H_hat : array_like, shape (K, M)
        Channel (estimate) matrix.
    alpha : float
        Regularization, strictly positive.

    Returns
    -------
    ndarray, shape (M, M)
        Hermitian positive definite inverse, eigenvalues in ``(0, 1/α]``.
    """
    G = regularized_gram(H_hat, alpha)
    factor = sla.cho_factor(G, lower=True, check_finite=False)
    inv = sla.cho_solve(factor, np.eye(G.shape[0], dtype=np.complex128), check_finite=False)
    return hermitian_part(inv)


def regularized_pseudo_inverse(H_hat, alpha: float) -> np.ndarray:
    """``(Ĥᴴ Ĥ + M α I_M)⁻¹ Ĥᴴ`` via a Cholesky solve (no explicit inverse)."""
    H_hat = as_complex_matrix(H_hat, "H_hat")
    alpha = _check_alpha(alpha)
    M = H_hat.shape[1]
    G = H_hat.conj().T @ H_hat
    G[np.diag_indices(M)] += M * alpha
    factor = sla.cho_factor(hermitian_part(G), lower=True, check_finite=False)
    return sla.cho_solve(factor, H_hat.conj().T, check_finite=False)


def frobenius_norm_sq(A) -> float:
    """Sum of squared moduli of all entries."""
    A = np.asarray(A)
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("matrix contains non-finite entries")
    return float(np.sum(A.real ** 2 + A.imag ** 2))


def trace_product(A, B) -> complex:
    """``tr(A B)`` without forming the product."""
    A = as_complex_matrix(A, "A")
    B = as_complex_matrix(B, "B")
    if A.shape[0] != A.shape[1] or A.shape != B.shape:
        raise InvalidInputError(
            f"trace_product needs square matrices of equal size, got {A.shape} and {B.shape}"
        )
    return complex(np.sum(A * B.T))


def quadratic_form(x, A, y=None) -> complex:
    """``xᴴ A y`` (``y`` defaults to ``x``)."""
    x = np.asarray(x, dtype=np.complex128)
    y = x if y is None else np.asarray(y, dtype=np.complex128)
    A = np.asarray(A, dtype=np.complex128)
    if A.shape != (x.shape[0], y.shape[0]):
        raise InvalidInputError(f"shape mismatch: x{x.shape}, A{A.shape}, y{y.shape}")
    return complex(np.vdot(x, A @ y))
