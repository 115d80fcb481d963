"""Simultaneous diagonalization warm starts for CP decomposition.

``simdiag`` is the classical pencil method on the ambient tensor: contract
all but two modes with Gaussian probes, then read loading vectors off the
eigenvectors of ``M1 @ pinv(M2)``. ``tasd_loadings`` runs the same
diagonalization on the R x ... x R core of a Tucker compression, which is
what makes the estimate usable under noise. ``complete_from_mode`` and
``align_exhaustive`` are the two ways to turn a single-mode estimate into a
fully aligned CP model.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from math import factorial
from typing import List, Optional, Sequence, Tuple

import itertools

import numpy as np

from .als import AlsOptions, RunReport, als, fit_lambda, r1_als
from .errors import CoherentCollapseError, DegenerateProbesError, PermutationBudgetError
from .linalg import RCOND, eig, pinv
from .model import CpModel, normalize_columns
from .tensor import contract_vectors, unfold
from .tucker import TuckerOptions, hooi

__all__ = [
    "TasdOptions",
    "simdiag",
    "tasd_loadings",
    "complete_from_mode",
    "align_exhaustive",
    "tasd_decompose",
    "tasd_als",
]

_GAP_TOL = 1e-10  # relative eigenvalue-coincidence guard
_REAL_TOL = 1e-8  # below this, a real part is considered degenerate


@dataclass
class TasdOptions:
    """Diagonalization mode pair ``(mode, mode+1)``, probe retries, RNG."""

    mode: int = 0
    retries: int = 5
    rng: Optional[np.random.Generator] = None

    def __post_init__(self) -> None:
        if self.mode < 0:
            raise ValueError("mode must be >= 0")
        if self.retries < 1:
            raise ValueError("retries must be >= 1")

    def generator(self) -> np.random.Generator:
        return self.rng if self.rng is not None else np.random.default_rng()


def _top_eigvecs(mat: np.ndarray, rank: int) -> np.ndarray:
    """Top-``rank`` eigenvectors by modulus, guarded against coincident values."""
    pairs = eig(mat)
    values = pairs.values[:rank]
    if rank >= 2:
        scale = float(np.max(np.abs(values)))
        gaps = [
            abs(values[i] - values[j])
            for i in range(rank)
            for j in range(i + 1, rank)
        ]
        if min(gaps) < _GAP_TOL * max(scale, np.finfo(float).tiny):
            raise DegenerateProbesError("near-coincident eigenvalues; redraw probes")
    return pairs.vectors[:, :rank]


def _realify(vectors: np.ndarray) -> np.ndarray:
    """Real unit columns from complex eigenvectors.

    Eigenvectors are determined up to a complex phase, so when the real part
    of a column nearly vanishes its imaginary part spans the same direction.
    """
    out = np.empty(vectors.shape, dtype=np.float64)
    for j in range(vectors.shape[1]):
        col = vectors[:, j].real
        if np.linalg.norm(col) < _REAL_TOL:
            col = vectors[:, j].imag
        out[:, j] = col
    return normalize_columns(out)[0]


def _pencil_eigvecs(
    t: np.ndarray,
    target: int,
    partner: int,
    rank: int,
    probe_len: Sequence[int],
    rng: np.random.Generator,
    retries: int,
) -> np.ndarray:
    """Eigenvectors of ``M1 @ pinv(M2)`` for probe-contracted slices of ``t``.

    ``M_i`` unfolds ``t`` contracted on every mode outside ``{target,
    partner}`` with probe vectors of the given lengths; rows of ``M_i`` index
    ``target``. Probes are redrawn on eigenvalue coincidence, up to
    ``retries`` attempts.
    """
    others = [k for k in range(t.ndim) if k not in (target, partner)]
    last_err: Optional[Exception] = None
    for _ in range(retries):
        slices = []
        for _i in range(2):
            probes = [rng.standard_normal(probe_len[k]) for k in others]
            mat = contract_vectors(t, others, probes)
            if target > partner:
                mat = mat.T
            slices.append(np.asarray(mat))
        try:
            return _top_eigvecs(slices[0] @ pinv(slices[1]), rank)
        except DegenerateProbesError as exc:
            last_err = exc
    raise DegenerateProbesError(
        f"probes degenerate after {retries} attempts"
    ) from last_err


def simdiag(y, rank: int, rng: Optional[np.random.Generator] = None, retries: int = 5) -> np.ndarray:
    """Classical simultaneous diagonalization estimate of the mode-0 loadings.

    Works on the ambient tensor, restricting the eigen-decomposition of
    ``M1 @ pinv(M2)`` to its top-``rank`` spectrum. Exact without noise;
    expected to degrade quickly once noise is present.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.ndim < 3:
        raise ValueError("simultaneous diagonalization needs order >= 3")
    if not 1 <= rank <= min(y.shape[0], y.shape[1]):
        raise ValueError(f"rank {rank} out of range for leading dims {y.shape[:2]}")
    rng = rng if rng is not None else np.random.default_rng()
    vecs = _pencil_eigvecs(y, 0, 1, rank, y.shape, rng, retries)
    return _realify(vecs)


def _estimate_mode_from_core(
    model, target: int, rank: int, rng: np.random.Generator, retries: int
) -> np.ndarray:
    d = model.core.ndim
    partner = target + 1 if target + 1 < d else target - 1
    vecs = _pencil_eigvecs(
        model.core, target, partner, rank, model.core.shape, rng, retries
    )
    return normalize_columns(model.factors[target] @ _realify(vecs))[0]


def tasd_loadings(y, rank: int, opts: Optional[TasdOptions] = None):
    """Tucker-compressed diagonalization estimate of one mode's loadings.

    Compresses ``y`` to an ``(R, ..., R)`` core with HOOI, runs the pencil
    diagonalization on the core with length-``R`` Gaussian probes, and lifts
    the eigenvectors back through the Tucker factor of the requested mode.
    Returns the ``p_mode x R`` loading estimate with unit columns.
    """
    opts = opts or TasdOptions()
    a, _ = _tasd_loadings_with_model(y, rank, opts)
    return a


def _tasd_loadings_with_model(y, rank: int, opts: TasdOptions):
    y = np.asarray(y, dtype=np.float64)
    d = y.ndim
    if d < 3:
        raise ValueError("needs order >= 3")
    if not 1 <= rank <= min(y.shape):
        raise ValueError(f"rank {rank} must be within [1, min(dims)] for dims {y.shape}")
    if opts.mode > d - 2:
        raise ValueError(f"mode {opts.mode} has no partner mode {opts.mode + 1}")
    model = hooi(y, TuckerOptions(ranks=(rank,) * d))
    a = _estimate_mode_from_core(model, opts.mode, rank, opts.generator(), opts.retries)
    return a, model


def complete_from_mode(
    y,
    rank: int,
    a_mode: np.ndarray,
    mode: int,
    r1_opts: Optional[AlsOptions] = None,
) -> List[np.ndarray]:
    """Recover the remaining loading matrices from one known mode.

    Solves ``argmin_A ||unfold(y, mode) - a_mode @ A||_F`` in closed form,
    folds each of the R rows back into an order-(d-1) tensor, and fits each
    with rank-one ALS. Row ``r`` inherits the column order of ``a_mode``, so
    the output is column-aligned with it. Returns the full factor list with
    ``a_mode`` in place.
    """
    y = np.asarray(y, dtype=np.float64)
    d = y.ndim
    a_mode = np.asarray(a_mode, dtype=np.float64)
    if a_mode.shape != (y.shape[mode], rank):
        raise ValueError(f"expected shape {(y.shape[mode], rank)} for the known mode")
    s = np.linalg.svd(a_mode, compute_uv=False)
    if s[-1] <= RCOND * s[0]:
        raise CoherentCollapseError("known loading matrix is rank-deficient")
    rows = pinv(a_mode) @ unfold(y, mode)
    rest = [k for k in range(d) if k != mode]
    rest_dims = [y.shape[k] for k in rest]
    columns: List[List[np.ndarray]] = [[] for _ in rest]
    for r in range(rank):
        sub = np.reshape(rows[r], rest_dims, order="F")
        sub_model, _ = r1_als(sub, r1_opts or AlsOptions())
        for i in range(len(rest)):
            columns[i].append(sub_model.factors[i][:, 0])
    factors: List[np.ndarray] = [None] * d  # type: ignore[list-item]
    factors[mode] = a_mode
    for i, k in enumerate(rest):
        factors[k] = np.column_stack(columns[i])
    return factors


def align_exhaustive(
    y, factors: Sequence[np.ndarray], budget: int = 1_000_000
) -> Tuple[tuple, CpModel]:
    """Best consistent column ordering across independently estimated modes.

    Mode 0 keeps its order; every combination of column permutations of the
    remaining modes is scored by the least-squares fit of the weights, and
    the combination with the smallest residual wins (ties go to the
    lexicographically smallest tuple). Raises
    :class:`PermutationBudgetError` when ``(R!)^(d-1)`` exceeds ``budget``.
    """
    y = np.asarray(y, dtype=np.float64)
    d = y.ndim
    facs = [np.asarray(f, dtype=np.float64) for f in factors]
    rank = facs[0].shape[1]
    combos = factorial(rank) ** (d - 1)
    if combos > budget:
        raise PermutationBudgetError(f"{combos} combinations exceed budget {budget}")
    perms = list(itertools.permutations(range(rank)))
    best_res = np.inf
    best_combo = None
    best_lam = None
    for combo in itertools.product(perms, repeat=d - 1):
        candidate = [facs[0]] + [facs[k][:, combo[k - 1]] for k in range(1, d)]
        lam, res = fit_lambda(y, candidate)
        if res < best_res:
            best_res = res
            best_combo = combo
            best_lam = lam
    aligned = [facs[0]] + [facs[k][:, best_combo[k - 1]] for k in range(1, d)]
    model = _signed_model(best_lam, aligned)
    return (tuple(range(rank)),) + best_combo, model


def _signed_model(lambdas: np.ndarray, factors: Sequence[np.ndarray]) -> CpModel:
    # Store weight magnitudes; negative weights flip the mode-0 column instead.
    factors = [np.array(f, dtype=np.float64, copy=True) for f in factors]
    lambdas = np.asarray(lambdas, dtype=np.float64).copy()
    neg = lambdas < 0
    factors[0][:, neg] *= -1.0
    lambdas = np.abs(lambdas)
    return CpModel(lambdas, factors)


def tasd_decompose(
    y,
    rank: int,
    opts: Optional[TasdOptions] = None,
    budget: int = 1_000_000,
) -> CpModel:
    """Full CP estimate from the Tucker-compressed diagonalization alone.

    When the permutation search fits the budget, every mode is estimated
    from the shared Tucker core and aligned exhaustively; otherwise the
    remaining modes are completed from the single estimated mode. Weights
    come from the final least-squares fit.
    """
    y = np.asarray(y, dtype=np.float64)
    opts = opts or TasdOptions()
    a_h, model = _tasd_loadings_with_model(y, rank, opts)
    d = y.ndim
    rng = opts.generator()
    if factorial(rank) ** (d - 1) <= budget:
        facs = []
        for k in range(d):
            if k == opts.mode:
                facs.append(a_h)
            else:
                facs.append(_estimate_mode_from_core(model, k, rank, rng, opts.retries))
        _, aligned = align_exhaustive(y, facs, budget=budget)
        return aligned
    facs = complete_from_mode(y, rank, a_h, opts.mode)
    lam, _ = fit_lambda(y, facs)
    return _signed_model(lam, facs)


def tasd_als(
    y,
    rank: int,
    opts: Optional[TasdOptions] = None,
    als_opts: Optional[AlsOptions] = None,
    budget: int = 1_000_000,
    loss_fn=None,
) -> Tuple[CpModel, RunReport]:
    """ALS warm-started by the compressed-diagonalization estimate.

    The returned report's trace index 0 is the initialization; phase wall
    times for the warm start and the ALS refinement are recorded under
    ``phases``.
    """
    t0 = time.perf_counter()
    init = tasd_decompose(y, rank, opts=opts, budget=budget)
    t1 = time.perf_counter()
    model, report = als(y, rank, init.factors, opts=als_opts, loss_fn=loss_fn, method="als-tasd")
    t2 = time.perf_counter()
    report.phases = {"init_s": t1 - t0, "als_s": t2 - t1}
    report.wall_time_s = t2 - t0
    return model, report
