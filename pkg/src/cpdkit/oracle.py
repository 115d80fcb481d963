"""Deliberately naive reference implementations for cross-checking.

Everything here trades speed for obviousness: explicit index loops and fully
materialized systems. Kept in the shipped package (not only in tests) so
alternate implementations can validate against the same oracles.
"""

from __future__ import annotations

import itertools
from functools import reduce
from math import factorial
from typing import List, Sequence, Tuple

import numpy as np

from .errors import PermutationBudgetError

__all__ = ["naive_unfold", "naive_mode_ls", "enumerate_permutations_loss"]


def naive_unfold(t, mode: int) -> np.ndarray:
    """Mode unfolding by direct enumeration of the index map."""
    a = np.asarray(t, dtype=np.float64)
    dims = a.shape
    rest = [h for h in range(a.ndim) if h != mode]
    ncols = 1
    for h in rest:
        ncols *= dims[h]
    out = np.zeros((dims[mode], ncols))
    for idx in itertools.product(*(range(p) for p in dims)):
        col = 0
        for h in rest:
            weight = 1
            for m in range(h):
                if m != mode:
                    weight *= dims[m]
            col += idx[h] * weight
        out[idx[mode], col] = a[idx]
    return out


def naive_mode_ls(y, factors: Sequence[np.ndarray], mode: int) -> np.ndarray:
    """Mode update by materializing the full Khatri-Rao system and lstsq.

    Ground truth for the Gram-based mode update; intended for small
    instances only.
    """
    y = np.asarray(y, dtype=np.float64)
    d = y.ndim
    rank = factors[0].shape[1]
    rest = [k for k in range(d) if k != mode]
    ncols = 1
    for k in rest:
        ncols *= y.shape[k]
    design = np.zeros((ncols, rank))
    for r in range(rank):
        cols = [np.asarray(factors[k])[:, r] for k in reversed(rest)]
        design[:, r] = reduce(np.kron, cols)
    m = naive_unfold(y, mode)
    # argmin_B ||M - B W^T||  <=>  argmin_X ||W X - M^T|| with B = X^T
    return np.linalg.lstsq(design, m.T, rcond=1e-12)[0].T


def enumerate_permutations_loss(
    y, factors: Sequence[np.ndarray], budget: int = 1_000_000
) -> Tuple[tuple, float]:
    """Best column-permutation combination by full enumeration.

    Mode 0 keeps its column order (a simultaneous permutation of every mode
    leaves the reconstruction unchanged); modes 1..d-1 are searched. For each
    combination the weights are fit by vanilla least squares on the fully
    materialized rank-one design. Returns ``(permutations, residual)``.
    """
    y = np.asarray(y, dtype=np.float64)
    d = y.ndim
    rank = factors[0].shape[1]
    combos = factorial(rank) ** (d - 1)
    if combos > budget:
        raise PermutationBudgetError(f"{combos} combinations exceed budget {budget}")
    vec = y.ravel()
    perms = list(itertools.permutations(range(rank)))
    best_perm = None
    best_res = np.inf
    for combo in itertools.product(perms, repeat=d - 1):
        full: List[np.ndarray] = [np.asarray(factors[0])]
        for k in range(1, d):
            full.append(np.asarray(factors[k])[:, combo[k - 1]])
        design = np.zeros((vec.shape[0], rank))
        for r in range(rank):
            design[:, r] = reduce(np.kron, [full[k][:, r] for k in range(d)])
        lam = np.linalg.lstsq(design, vec, rcond=1e-12)[0]
        res = float(np.linalg.norm(design @ lam - vec))
        if res < best_res:
            best_res = res
            best_perm = (tuple(range(rank)),) + combo
    return best_perm, best_res
