"""Dense linear-algebra kernels with pinned accuracy contracts.

Thin wrappers over LAPACK (via numpy/scipy) that fix tolerances, sign
conventions, and eigenpair ordering so the decomposition algorithms are
reproducible. ``RCOND`` is the package-wide relative rank-truncation
threshold for pseudoinverses and least squares.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import EigenDecompositionError

__all__ = ["RCOND", "EigenPairs", "svd_r", "pinv", "eig", "lstsq"]

RCOND = 1e-12


@dataclass(frozen=True)
class EigenPairs:
    """Eigenvalues and unit-norm eigenvectors, column ``j`` paired with value ``j``.

    Pairs are sorted by descending eigenvalue modulus, ties broken by
    descending real part.
    """

    values: np.ndarray
    vectors: np.ndarray


def _check_finite(a: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{what} contains non-finite entries")


def _as_matrix(m, what: str = "input") -> np.ndarray:
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"{what} must be a matrix")
    _check_finite(a, what)
    return a


def _fix_signs(u: np.ndarray) -> np.ndarray:
    # Flip each column so its largest-magnitude entry is positive.
    idx = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[idx, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs


def svd_r(m, r: int) -> np.ndarray:
    """Top-``r`` left singular vectors, columns orthonormal and sign-fixed."""
    a = _as_matrix(m)
    if not 1 <= r <= min(a.shape):
        raise ValueError(f"r={r} out of range for shape {a.shape}")
    u = np.linalg.svd(a, full_matrices=False)[0][:, :r]
    return _fix_signs(u)


def pinv(m, rcond: float = RCOND) -> np.ndarray:
    """Moore-Penrose pseudoinverse; singular values below ``rcond * sigma_max`` are dropped."""
    a = _as_matrix(m)
    return np.linalg.pinv(a, rcond=rcond)


def eig(m) -> EigenPairs:
    """Eigen-decomposition of a general square real matrix.

    Falls back from LAPACK ``geev`` via numpy to scipy (which balances
    differently) before giving up with :class:`EigenDecompositionError`.
    """
    a = _as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise ValueError("eig expects a square matrix")
    try:
        values, vectors = np.linalg.eig(a)
    except np.linalg.LinAlgError:
        try:
            values, vectors = scipy.linalg.eig(a)
        except Exception as exc:  # pragma: no cover - scipy rarely fails after numpy does
            raise EigenDecompositionError("eigen-decomposition did not converge") from exc
    order = np.lexsort((-values.real, -np.abs(values)))
    values = values[order]
    vectors = vectors[:, order]
    norms = np.linalg.norm(vectors, axis=0)
    norms[norms == 0] = 1.0
    return EigenPairs(values=values, vectors=vectors / norms)


def lstsq(a, b, rcond: float = RCOND) -> np.ndarray:
    """Minimum-norm solution of ``argmin_X ||a X - b||_F``."""
    a = _as_matrix(a, "lhs")
    barr = np.asarray(b, dtype=np.float64)
    _check_finite(barr, "rhs")
    if barr.shape[0] != a.shape[0]:
        raise ValueError("lhs and rhs row counts differ")
    return np.linalg.lstsq(a, barr, rcond=rcond)[0]
