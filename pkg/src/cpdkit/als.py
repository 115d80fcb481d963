"""Alternating least squares for CP decomposition, rank one and general rank.

The rank-one solver follows the spectral-init power-iteration scheme; the
general solver sweeps modes in ascending order, each update solving the
mode-wise least-squares problem in closed form through the R x R Khatri-Rao
Gram system. Weights and the fitted signal are read off the most recent
mode-0 update.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import CoherentCollapseError, ZeroUpdateError
from .linalg import RCOND, svd_r
from .model import CpModel, normalize_columns, rank_one
from .tensor import contract_vectors, frobenius_norm, khatri_rao_excluding, unfold

__all__ = [
    "AlsOptions",
    "RunReport",
    "r1_init",
    "r1_als",
    "als_update_mode",
    "als",
    "estimate_lambda_signal",
    "fit_lambda",
]


@dataclass
class AlsOptions:
    """Iteration cap and sweep-to-sweep stopping threshold.

    ``tol`` bounds the largest sign-aware column change
    ``min(||a_new - a_old||, ||a_new + a_old||)`` over all modes and columns.
    """

    max_iters: int = 100
    tol: float = 1e-8
    record_trace: bool = True

    def __post_init__(self) -> None:
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol < 0:
            raise ValueError("tol must be >= 0")


@dataclass
class RunReport:
    """Per-run bookkeeping: traces, iteration count, wall time, phase splits.

    Trace index 0 always describes the initialization, so traces have length
    ``iterations + 1``. ``loss_trace`` is only populated when a ground-truth
    model was supplied.
    """

    method: str
    iterations: int
    wall_time_s: float
    fit_trace: List[float] = field(default_factory=list)
    loss_trace: Optional[List[float]] = None
    seed: Optional[int] = None
    phases: dict = field(default_factory=dict)


def _check_input(y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if not np.all(np.isfinite(y)):
        raise ValueError("input tensor contains non-finite entries")
    return y


def r1_init(y) -> List[np.ndarray]:
    """Spectral initialization: leading left singular vector of each unfolding."""
    y = _check_input(y)
    if y.ndim < 2:
        raise ValueError("spectral initialization needs order >= 2")
    if frobenius_norm(y) == 0.0:
        raise ZeroUpdateError("all-zero tensor has no leading singular vector")
    return [svd_r(unfold(y, k), 1)[:, 0] for k in range(y.ndim)]


def _kron_excluding(vectors: Sequence[np.ndarray], skip: int) -> np.ndarray:
    cols = [vectors[k] for k in reversed(range(len(vectors))) if k != skip]
    return reduce(np.kron, cols)


def r1_als(
    y,
    opts: Optional[AlsOptions] = None,
    init: Optional[Sequence[np.ndarray]] = None,
    loss_fn: Optional[Callable[[List[np.ndarray]], float]] = None,
) -> Tuple[CpModel, RunReport]:
    """Rank-one ALS (tensor power iteration) with spectral default init.

    ``loss_fn``, when given, is evaluated on the current unit vectors after
    the initialization and after every sweep and recorded as the loss trace.
    """
    y = _check_input(y)
    opts = opts or AlsOptions()
    d = y.ndim
    if d < 2:
        raise ValueError("rank-one ALS needs order >= 2")
    if init is None:
        vecs = r1_init(y)
    else:
        if len(init) != d:
            raise ValueError("one init vector per mode required")
        vecs = [normalize_columns(np.asarray(v, dtype=np.float64).reshape(-1, 1))[0][:, 0] for v in init]
    zero_floor = 1e-14 * max(frobenius_norm(y), 1.0)

    t0 = time.perf_counter()
    unfoldings = [unfold(y, k) for k in range(d)]
    loss_trace = [loss_fn(vecs)] if loss_fn is not None else None
    fit_trace = [_rank_one_fit(y, vecs)]
    iters = 0
    for _ in range(opts.max_iters):
        prev = [v.copy() for v in vecs]
        for k in range(d):
            w = _kron_excluding(vecs, k)
            b = unfoldings[k] @ w / (w @ w)
            nb = float(np.linalg.norm(b))
            if nb <= zero_floor:
                raise ZeroUpdateError(f"zero-norm update at mode {k}")
            vecs[k] = b / nb
        iters += 1
        if loss_trace is not None:
            loss_trace.append(loss_fn(vecs))
        fit_trace.append(_rank_one_fit(y, vecs))
        delta = max(
            min(np.linalg.norm(v - p), np.linalg.norm(v + p)) for v, p in zip(vecs, prev)
        )
        if delta <= opts.tol:
            break
    # Weight from a final mode-0 least squares against the settled vectors.
    w = _kron_excluding(vecs, 0)
    b0 = unfoldings[0] @ w / (w @ w)
    lam = float(np.linalg.norm(b0))
    if lam <= zero_floor:
        raise ZeroUpdateError("zero-norm update at mode 0")
    vecs[0] = b0 / lam
    model = CpModel(np.array([lam]), [v.reshape(-1, 1) for v in vecs])
    report = RunReport(
        method="r1-als",
        iterations=iters,
        wall_time_s=time.perf_counter() - t0,
        fit_trace=fit_trace,
        loss_trace=loss_trace,
    )
    return model, report


def _rank_one_fit(y: np.ndarray, vecs: Sequence[np.ndarray]) -> float:
    # Residual after the optimal scale for the current unit vectors.
    scale = float(contract_vectors(y, range(y.ndim), vecs))
    return float(np.sqrt(max(frobenius_norm(y) ** 2 - scale**2, 0.0)))


def als_update_mode(y, factors: Sequence[np.ndarray], mode: int, rcond: float = RCOND) -> np.ndarray:
    """Closed-form mode update ``unfold(y, mode) @ pinv(khatri_rao(others).T)``.

    Solved through the R x R Gram system (Khatri-Rao Gram identity) for
    speed; when the Gram condition number exceeds ``1/rcond`` the update
    falls back to an SVD pseudoinverse of the materialized Khatri-Rao
    matrix. A Khatri-Rao matrix that is numerically rank-deficient at
    ``rcond`` raises :class:`CoherentCollapseError`.
    """
    y = _check_input(y)
    d = y.ndim
    if not 0 <= mode < d:
        raise ValueError(f"mode {mode} out of range")
    facs = [np.asarray(f, dtype=np.float64) for f in factors]
    if len(facs) != d:
        raise ValueError("one factor per mode required")
    rank = facs[0].shape[1]
    if any(f.shape[1] != rank for f in facs):
        raise ValueError("factors must share the column count")

    rest = [k for k in range(d) if k != mode]
    gram = np.ones((rank, rank))
    for k in rest:
        gram *= facs[k].T @ facs[k]
    proj = np.empty((y.shape[mode], rank))
    for r in range(rank):
        proj[:, r] = contract_vectors(y, rest, [facs[k][:, r] for k in rest])

    evals = np.linalg.eigvalsh(gram)
    if evals[0] > 0 and evals[-1] / evals[0] <= 1.0 / rcond:
        return np.linalg.solve(gram, proj.T).T
    # Ill-conditioned Gram: solve through the Khatri-Rao matrix itself.
    w = khatri_rao_excluding(facs, mode)
    u, s, vt = np.linalg.svd(w, full_matrices=False)
    keep = s > rcond * s[0] if s[0] > 0 else np.zeros_like(s, dtype=bool)
    if int(np.count_nonzero(keep)) < rank:
        raise CoherentCollapseError(
            f"Khatri-Rao system for mode {mode} is rank-deficient at rcond={rcond:g}"
        )
    return (unfold(y, mode) @ u[:, keep]) / s[keep] @ vt[keep]


def als(
    y,
    rank: int,
    init: Sequence[np.ndarray],
    opts: Optional[AlsOptions] = None,
    loss_fn: Optional[Callable[[CpModel], float]] = None,
    method: str = "als",
) -> Tuple[CpModel, RunReport]:
    """General-rank ALS from the given initial factors.

    Sweeps modes 0..d-1, normalizing columns after each update. The fit
    trace records ``||y - xhat||_F`` with ``xhat`` assembled from the most
    recent mode-0 least squares; index 0 is the residual of the
    initialization under its best weights.
    """
    y = _check_input(y)
    opts = opts or AlsOptions()
    d = y.ndim
    if len(init) != d:
        raise ValueError("one init factor per mode required")
    factors = []
    for k, f in enumerate(init):
        f = np.asarray(f, dtype=np.float64)
        if f.shape != (y.shape[k], rank):
            raise ValueError(f"init factor {k} must have shape {(y.shape[k], rank)}")
        factors.append(normalize_columns(f)[0])
    max_rank = min(
        int(np.prod([p for h, p in enumerate(y.shape) if h != k])) for k in range(d)
    )
    if rank > max_rank:
        raise ValueError(f"rank {rank} exceeds {max_rank} supported by dims {y.shape}")

    t0 = time.perf_counter()
    _, fit0 = fit_lambda(y, factors)
    fit_trace = [fit0]
    loss_trace = None
    if loss_fn is not None:
        loss_trace = [loss_fn(CpModel(np.ones(rank), [f.copy() for f in factors]))]

    b0 = als_update_mode(y, factors, 0)
    iters = 0
    lambdas = None
    xhat = None
    for _ in range(opts.max_iters):
        prev = [f.copy() for f in factors]
        factors[0] = normalize_columns(b0)[0]
        for k in range(1, d):
            factors[k] = normalize_columns(als_update_mode(y, factors, k))[0]
        iters += 1
        b0 = als_update_mode(y, factors, 0)
        lambdas, xhat = estimate_lambda_signal(y, factors, b0)
        fit_trace.append(frobenius_norm(y - xhat))
        if loss_trace is not None:
            loss_trace.append(loss_fn(CpModel(lambdas, [f.copy() for f in factors])))
        delta = max(
            float(
                max(
                    min(np.linalg.norm(f[:, r] - p[:, r]), np.linalg.norm(f[:, r] + p[:, r]))
                    for r in range(rank)
                )
            )
            for f, p in zip(factors, prev)
        )
        if delta <= opts.tol:
            break
    model = CpModel(lambdas, factors)
    report = RunReport(
        method=method,
        iterations=iters,
        wall_time_s=time.perf_counter() - t0,
        fit_trace=fit_trace,
        loss_trace=loss_trace,
    )
    return model, report


def estimate_lambda_signal(
    y, factors: Sequence[np.ndarray], b0: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Weight magnitudes and fitted signal from the latest mode-0 update.

    ``|lambda_r|`` is the norm of column ``r`` of ``b0``; the signal is
    assembled from the unnormalized ``b0`` columns and the unit columns of
    the remaining modes (their signs live inside ``b0``).
    """
    y = np.asarray(y, dtype=np.float64)
    b0 = np.asarray(b0, dtype=np.float64)
    rank = b0.shape[1]
    lambdas = np.linalg.norm(b0, axis=0)
    xhat = np.zeros(y.shape)
    for r in range(rank):
        xhat += rank_one([b0[:, r]] + [np.asarray(factors[k])[:, r] for k in range(1, y.ndim)])
    return lambdas, xhat


def fit_lambda(y, factors: Sequence[np.ndarray]) -> Tuple[np.ndarray, float]:
    """Least-squares weights for fixed factors, plus the fit residual.

    Solves ``argmin_w ||sum_r w_r a_{0,r} o ... o a_{d-1,r} - y||_F`` through
    the R x R Gram of the rank-one design (Hadamard product of the per-mode
    Grams), falling back to a minimum-norm solution when singular.
    """
    y = np.asarray(y, dtype=np.float64)
    facs = [np.asarray(f, dtype=np.float64) for f in factors]
    rank = facs[0].shape[1]
    gram = np.ones((rank, rank))
    for f in facs:
        gram *= f.T @ f
    rhs = np.array(
        [float(contract_vectors(y, range(y.ndim), [f[:, r] for f in facs])) for r in range(rank)]
    )
    try:
        lam = np.linalg.solve(gram, rhs)
        if not np.all(np.isfinite(lam)):
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        lam = np.linalg.lstsq(gram, rhs, rcond=RCOND)[0]
    res_sq = frobenius_norm(y) ** 2 - 2.0 * lam @ rhs + lam @ gram @ lam
    return lam, float(np.sqrt(max(res_sq, 0.0)))
