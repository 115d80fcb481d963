"""Model containers: CP models, Tucker models, and reconstruction."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import List, Sequence

import numpy as np

from .errors import ZeroUpdateError

__all__ = ["CpModel", "TuckerModel", "cp_reconstruct", "normalize_columns", "rank_one"]


@dataclass
class CpModel:
    """Weighted sum of rank-one terms.

    ``factors[k]`` is ``p_k x R`` with unit-norm columns; ``lambdas`` holds the
    R term weights (estimates store magnitudes, the signs being absorbed by
    the loading columns).
    """

    lambdas: np.ndarray
    factors: List[np.ndarray]

    def __post_init__(self) -> None:
        self.lambdas = np.asarray(self.lambdas, dtype=np.float64).ravel()
        self.factors = [np.asarray(f, dtype=np.float64) for f in self.factors]

    @property
    def rank(self) -> int:
        return int(self.lambdas.shape[0])

    @property
    def order(self) -> int:
        return len(self.factors)

    @property
    def dims(self) -> tuple:
        return tuple(f.shape[0] for f in self.factors)

    def validate(self, tol: float = 1e-10) -> None:
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        for k, f in enumerate(self.factors):
            if f.ndim != 2 or f.shape[1] != self.rank:
                raise ValueError(f"factor {k} must be p_{k} x {self.rank}")
            norms = np.linalg.norm(f, axis=0)
            if np.any(np.abs(norms - 1.0) > tol):
                raise ValueError(f"factor {k} has non-unit columns")

    def copy(self) -> "CpModel":
        return CpModel(self.lambdas.copy(), [f.copy() for f in self.factors])


@dataclass
class TuckerModel:
    """Core tensor plus per-mode column-orthonormal factors.

    ``fit_trace`` records ``||y x_k U_k^T||_F`` per sweep (index 0 is the
    value at the initialization); ``fit_residual`` is ``||y - core x U||_F``
    at return time.
    """

    core: np.ndarray
    factors: List[np.ndarray]
    fit_residual: float = 0.0
    fit_trace: List[float] = field(default_factory=list)

    @property
    def ranks(self) -> tuple:
        return tuple(self.core.shape)


def rank_one(vectors: Sequence[np.ndarray]) -> np.ndarray:
    """Outer product of the given vectors, one per mode."""
    vecs = [np.asarray(v, dtype=np.float64).ravel() for v in vectors]
    return reduce(np.multiply.outer, vecs)


def cp_reconstruct(model: CpModel) -> np.ndarray:
    """Dense tensor ``sum_r lambda_r a_{0,r} o ... o a_{d-1,r}``."""
    dims = model.dims
    out = np.zeros(dims, dtype=np.float64)
    for r in range(model.rank):
        out += model.lambdas[r] * rank_one([f[:, r] for f in model.factors])
    return out


def normalize_columns(b: np.ndarray, zero_tol: float = 0.0) -> tuple:
    """Scale each column to unit norm; returns (normalized, norms).

    Raises :class:`ZeroUpdateError` when a column norm is at or below
    ``zero_tol`` (an orthogonal collapse an ALS sweep cannot recover from).
    """
    b = np.asarray(b, dtype=np.float64)
    norms = np.linalg.norm(b, axis=0)
    if np.any(norms <= zero_tol) or not np.all(np.isfinite(norms)):
        raise ZeroUpdateError("zero-norm update column")
    return b / norms, norms
