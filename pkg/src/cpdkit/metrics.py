"""Sign- and permutation-aware error metrics for estimated loadings."""

from __future__ import annotations

import itertools
from math import factorial
from typing import Sequence, Tuple

import numpy as np

from .model import CpModel

__all__ = ["loss_general", "loss_unmatched", "best_aligned_loss", "permute_model"]

_EXHAUSTIVE_LIMIT = 720  # 6! permutations; larger ranks use the greedy matcher


def _column_distances(est: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """``D[i, j] = min(||est_i - truth_j||, ||est_i + truth_j||)``."""
    if est.shape[0] != truth.shape[0]:
        raise ValueError("column length mismatch")
    inner = est.T @ truth
    e2 = np.sum(est**2, axis=0)[:, None]
    t2 = np.sum(truth**2, axis=0)[None, :]
    return np.sqrt(np.maximum(e2 + t2 - 2.0 * np.abs(inner), 0.0))


def loss_general(est: CpModel, truth: CpModel) -> float:
    """Worst column error over all modes, up to per-column sign flips.

    Columns are assumed already aligned (column ``r`` of the estimate
    estimates column ``r`` of the truth in every mode). Reduces to the
    rank-one metric ``max_k min(||a_hat - a||, ||a_hat + a||)`` when R = 1.
    """
    if est.dims != truth.dims or est.rank != truth.rank:
        raise ValueError("models must share dims and rank")
    worst = 0.0
    for fe, ft in zip(est.factors, truth.factors):
        d = _column_distances(fe, ft)
        worst = max(worst, float(np.max(np.diagonal(d))))
    return worst


def loss_unmatched(est_cols, truth_cols) -> np.ndarray:
    """Per estimated column: min over all truth columns and both signs."""
    est = np.asarray(est_cols, dtype=np.float64)
    truth = np.asarray(truth_cols, dtype=np.float64)
    if est.ndim != 2 or truth.ndim != 2:
        raise ValueError("expected matrices")
    return np.min(_column_distances(est, truth), axis=1)


def permute_model(model: CpModel, perm: Sequence[int]) -> CpModel:
    """Reorder the columns of every factor (and the weights) by ``perm``."""
    perm = list(perm)
    return CpModel(model.lambdas[perm], [f[:, perm] for f in model.factors])


def best_aligned_loss(est: CpModel, truth: CpModel) -> Tuple[float, tuple]:
    """Minimum of :func:`loss_general` over consistent column permutations.

    A single permutation is applied to every mode of the estimate (columns of
    a CP model correspond across modes). Exhaustive for rank <= 6; a greedy
    assignment on summed distances otherwise.
    """
    if est.dims != truth.dims or est.rank != truth.rank:
        raise ValueError("models must share dims and rank")
    rank = est.rank
    dist = np.stack(
        [_column_distances(fe, ft) for fe, ft in zip(est.factors, truth.factors)]
    )  # (d, R, R): dist[k, i, j] compares est column i with truth column j
    if factorial(rank) <= _EXHAUSTIVE_LIMIT:
        best_perm = None
        best = np.inf
        idx = np.arange(rank)
        for perm in itertools.permutations(range(rank)):
            val = float(np.max(dist[:, perm, idx]))
            if val < best:
                best = val
                best_perm = perm
        return best, best_perm
    # Greedy fallback: repeatedly match the pair with the smallest summed distance.
    cost = dist.sum(axis=0)
    perm = [-1] * rank
    used_est, used_truth = set(), set()
    for _ in range(rank):
        best_pair, best_val = None, np.inf
        for i in range(rank):
            if i in used_est:
                continue
            for j in range(rank):
                if j in used_truth:
                    continue
                if cost[i, j] < best_val:
                    best_val = cost[i, j]
                    best_pair = (i, j)
        i, j = best_pair
        used_est.add(i)
        used_truth.add(j)
        perm[j] = i
    perm = tuple(perm)
    idx = np.arange(rank)
    return float(np.max(dist[:, perm, idx])), perm
