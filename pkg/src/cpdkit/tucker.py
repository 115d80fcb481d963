"""Tucker decomposition: HOSVD initialization and HOOI refinement."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from .linalg import svd_r
from .model import TuckerModel
from .tensor import frobenius_norm, mode_product, unfold

__all__ = ["TuckerOptions", "hosvd", "hooi"]


@dataclass
class TuckerOptions:
    """Ranks and stopping rule for :func:`hooi`.

    ``tol`` bounds the relative change of the fit ``||y x_k U_k^T||_F``
    between sweeps.
    """

    ranks: Tuple[int, ...]
    max_iters: int = 50
    tol: float = 1e-10

    def __post_init__(self) -> None:
        self.ranks = tuple(int(r) for r in self.ranks)
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol < 0:
            raise ValueError("tol must be >= 0")


def _check_ranks(y: np.ndarray, ranks: Sequence[int]) -> None:
    if len(ranks) != y.ndim:
        raise ValueError("one rank per mode required")
    for k, r in enumerate(ranks):
        if not 1 <= r <= y.shape[k]:
            raise ValueError(f"rank {r} out of range for mode {k} of size {y.shape[k]}")


def _compress(y: np.ndarray, factors: List[np.ndarray], skip: int = -1) -> np.ndarray:
    out = y
    for h, u in enumerate(factors):
        if h != skip:
            out = mode_product(out, h, u.T)
    return out


def hosvd(y, ranks: Sequence[int]) -> List[np.ndarray]:
    """Per-mode truncated SVD factors of the unfoldings."""
    y = np.asarray(y, dtype=np.float64)
    _check_ranks(y, ranks)
    return [svd_r(unfold(y, k), ranks[k]) for k in range(y.ndim)]


def hooi(y, opts: TuckerOptions) -> TuckerModel:
    """Alternating truncated SVDs of the compressed unfoldings, from HOSVD.

    Each sweep updates modes in ascending order using the freshest factors,
    so the fit is nondecreasing; stops when its relative change falls below
    ``opts.tol`` or after ``opts.max_iters`` sweeps.
    """
    y = np.asarray(y, dtype=np.float64)
    if not np.all(np.isfinite(y)):
        raise ValueError("input tensor contains non-finite entries")
    _check_ranks(y, opts.ranks)
    factors = hosvd(y, opts.ranks)
    fit = frobenius_norm(_compress(y, factors))
    trace = [fit]
    for _ in range(opts.max_iters):
        for k in range(y.ndim):
            compressed = _compress(y, factors, skip=k)
            factors[k] = svd_r(unfold(compressed, k), opts.ranks[k])
        prev, fit = fit, frobenius_norm(_compress(y, factors))
        trace.append(fit)
        if abs(fit - prev) <= opts.tol * max(prev, np.finfo(float).tiny):
            break
    core = _compress(y, factors)
    recon = core
    for k, u in enumerate(factors):
        recon = mode_product(recon, k, u)
    return TuckerModel(
        core=core,
        factors=factors,
        fit_residual=frobenius_norm(y - recon),
        fit_trace=trace,
    )
