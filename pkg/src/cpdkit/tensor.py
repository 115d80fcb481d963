"""Dense tensor primitives: unfolding, mode products, Kronecker and Khatri-Rao.

Tensors are real float64 ``numpy.ndarray``s in C-contiguous (lexicographic)
layout: the first index is the slowest-varying. Modes are 0-based, matching
numpy axes.

Unfolding convention
--------------------
``unfold(t, k)`` maps entry ``(i_0, ..., i_{d-1})`` to row ``i_k`` and column

    sum_{h != k} i_h * prod_{m < h, m != k} p_m

so among the remaining modes the *larger* mode index varies *slower*. Under
this convention the unfolded form of a weighted sum of rank-one terms is

    unfold(x, k) == A_k @ diag(w) @ khatri_rao([A_{d-1}, ..., A_{k+1}, A_{k-1}, ..., A_0]).T

with the Khatri-Rao factors listed in descending mode order. All modules in
this package rely on that descending order; do not reorder operands.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

__all__ = [
    "unfold",
    "fold",
    "mode_product",
    "contract_vectors",
    "kronecker",
    "khatri_rao",
    "khatri_rao_excluding",
    "frobenius_norm",
]


def _as_tensor(t) -> np.ndarray:
    a = np.asarray(t, dtype=np.float64)
    if a.ndim < 1:
        raise ValueError("tensors must have order >= 1")
    return a


def _check_mode(a: np.ndarray, mode: int) -> None:
    if not 0 <= mode < a.ndim:
        raise ValueError(f"mode {mode} out of range for order-{a.ndim} tensor")


def unfold(t, mode: int) -> np.ndarray:
    """Mode-``mode`` unfolding (matricization) of a tensor.

    Returns a ``p_mode x prod(other dims)`` matrix whose columns follow the
    layout documented in the module docstring.
    """
    a = _as_tensor(t)
    _check_mode(a, mode)
    return np.reshape(np.moveaxis(a, mode, 0), (a.shape[mode], -1), order="F")


def fold(m, mode: int, dims: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`unfold`: rebuild the tensor with shape ``dims``."""
    a = np.asarray(m, dtype=np.float64)
    dims = tuple(int(p) for p in dims)
    if a.ndim != 2:
        raise ValueError("fold expects a matrix")
    if not 0 <= mode < len(dims):
        raise ValueError(f"mode {mode} out of range for order-{len(dims)} shape")
    if any(p < 1 for p in dims):
        raise ValueError("all dims must be >= 1")
    rest = [p for h, p in enumerate(dims) if h != mode]
    expected = (dims[mode], int(np.prod(rest, dtype=np.int64)) if rest else 1)
    if a.shape != expected:
        raise ValueError(f"matrix shape {a.shape} does not match dims {dims} at mode {mode}")
    full = np.reshape(a, (dims[mode], *rest), order="F")
    return np.ascontiguousarray(np.moveaxis(full, 0, mode))


def mode_product(t, mode: int, b) -> np.ndarray:
    """Mode-``mode`` product ``t x_mode b``.

    Satisfies ``unfold(result, mode) == b @ unfold(t, mode)``; the result has
    ``t``'s shape with ``p_mode`` replaced by ``b.shape[0]``.
    """
    a = _as_tensor(t)
    _check_mode(a, mode)
    mat = np.asarray(b, dtype=np.float64)
    if mat.ndim != 2:
        raise ValueError("mode_product expects a matrix")
    if mat.shape[1] != a.shape[mode]:
        raise ValueError(
            f"matrix has {mat.shape[1]} columns but mode {mode} has size {a.shape[mode]}"
        )
    return np.ascontiguousarray(np.moveaxis(np.tensordot(mat, a, axes=(1, mode)), 0, mode))


def contract_vectors(t, modes: Sequence[int], vectors: Sequence) -> np.ndarray:
    """Contract the listed modes with one vector each.

    Equivalent to successive mode products with the row vector ``w.T`` on each
    listed mode; the contracted modes disappear, so the result has order
    ``d - len(modes)`` (a 0-d array when every mode is contracted).
    """
    a = _as_tensor(t)
    modes = [int(k) for k in modes]
    if len(set(modes)) != len(modes):
        raise ValueError("duplicate modes in contraction")
    if len(modes) != len(vectors):
        raise ValueError("one vector required per contracted mode")
    for k in modes:
        _check_mode(a, k)
    order = sorted(range(len(modes)), key=lambda i: modes[i], reverse=True)
    for i in order:
        w = np.asarray(vectors[i], dtype=np.float64).ravel()
        if w.shape[0] != a.shape[modes[i]]:
            raise ValueError(
                f"vector length {w.shape[0]} does not match mode {modes[i]} size {a.shape[modes[i]]}"
            )
        a = np.tensordot(a, w, axes=(modes[i], 0))
    return a


def kronecker(a, b) -> np.ndarray:
    """Kronecker product of two matrices (first operand varies slowest)."""
    return np.kron(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64))


def khatri_rao(mats: Sequence) -> np.ndarray:
    """Columnwise Kronecker product of matrices sharing a column count.

    Column ``r`` of the result is the Kronecker product of the ``r``-th
    columns taken in list order (first operand slowest-varying).
    """
    if len(mats) == 0:
        raise ValueError("khatri_rao needs at least one operand")
    arrs = [np.asarray(m, dtype=np.float64) for m in mats]
    for m in arrs:
        if m.ndim != 2:
            raise ValueError("khatri_rao operands must be matrices")
    ncols = arrs[0].shape[1]
    if any(m.shape[1] != ncols for m in arrs):
        raise ValueError("khatri_rao operands must share the column count")
    out = arrs[0]
    for m in arrs[1:]:
        out = (out[:, None, :] * m[None, :, :]).reshape(-1, ncols)
    return out


def khatri_rao_excluding(factors: Sequence, skip: int) -> np.ndarray:
    """Khatri-Rao over ``factors`` in descending mode order, skipping ``skip``.

    This is the operand order every least-squares identity in this package
    assumes (see module docstring).
    """
    mats = [factors[k] for k in reversed(range(len(factors))) if k != skip]
    if not mats:
        raise ValueError("nothing left after exclusion")
    return khatri_rao(mats)


def frobenius_norm(t) -> float:
    """Square root of the sum of squared entries."""
    return float(np.linalg.norm(np.asarray(t, dtype=np.float64).ravel()))
