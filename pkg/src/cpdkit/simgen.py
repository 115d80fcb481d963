"""Seeded synthetic CP models and noise for the benchmark scenarios.

All randomness flows through :class:`RandomSource`, a splittable counter-based
generator (Philox keyed by master seed and a spawn key), so every replicate
stream is reproducible and independent of scheduling order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .model import CpModel

__all__ = [
    "RandomSource",
    "ScenarioSpec",
    "resolve_lambdas",
    "gen_uniform_model",
    "gen_coherent_model",
    "add_noise",
]


@dataclass(frozen=True)
class RandomSource:
    """Master seed from which deterministic named streams are derived."""

    seed: int

    def stream(self, *key: int) -> np.random.Generator:
        """Independent generator for the given stream key.

        The same ``(seed, key)`` always yields the identical scalar sequence;
        distinct keys yield statistically independent streams.
        """
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=tuple(int(k) for k in key))
        return np.random.Generator(np.random.Philox(ss))


def resolve_lambdas(rule: Union[str, Sequence[float]], rank: int) -> np.ndarray:
    """Expand a weight rule: ``"rank"`` -> (1..R), ``"one"`` -> all ones, or explicit."""
    if isinstance(rule, str):
        if rule == "rank":
            return np.arange(1, rank + 1, dtype=np.float64)
        if rule == "one":
            return np.ones(rank)
        raise ValueError(f"unknown lambda rule {rule!r}")
    lam = np.asarray(rule, dtype=np.float64).ravel()
    if lam.shape[0] != rank:
        raise ValueError(f"lambda list has {lam.shape[0]} entries, expected {rank}")
    return lam


def gen_uniform_model(
    dims: Sequence[int], rank: int, lambdas, rng: np.random.Generator
) -> CpModel:
    """Loading entries i.i.d. Unif[-1, 1], columns normalized to unit norm."""
    if rank < 1:
        raise ValueError("rank must be >= 1")
    lam = resolve_lambdas(lambdas, rank) if not isinstance(lambdas, np.ndarray) else lambdas
    factors: List[np.ndarray] = []
    for p in dims:
        raw = rng.uniform(-1.0, 1.0, size=(int(p), rank))
        norms = np.linalg.norm(raw, axis=0)
        while np.any(norms < 1e-12):  # vanishing raw column: resample it
            for r in np.flatnonzero(norms < 1e-12):
                raw[:, r] = rng.uniform(-1.0, 1.0, size=int(p))
            norms = np.linalg.norm(raw, axis=0)
        factors.append(raw / norms)
    return CpModel(np.asarray(lam, dtype=np.float64), factors)


def gen_coherent_model(
    dims: Sequence[int], rank: int, xi: float, lambdas, rng: np.random.Generator
) -> CpModel:
    """Loadings with every within-mode pairwise inner product exactly ``xi``.

    Draws Haar-orthonormal columns (QR of a Gaussian matrix with the usual
    sign fix), then right-multiplies by the triangular factor of the target
    Gram ``(1 - xi) I + xi 11^T``, which makes the Gram hold exactly.
    """
    if not 0.0 <= xi < 1.0:
        raise ValueError("xi must lie in [0, 1)")
    if rank > min(int(p) for p in dims):
        raise ValueError("coherent loadings need rank <= min(dims)")
    lam = resolve_lambdas(lambdas, rank) if not isinstance(lambdas, np.ndarray) else lambdas
    gram = np.full((rank, rank), xi)
    np.fill_diagonal(gram, 1.0)
    upper = np.linalg.cholesky(gram).T  # upper.T @ upper == gram
    factors = []
    for p in dims:
        z = rng.standard_normal((int(p), rank))
        q, r = np.linalg.qr(z)
        signs = np.sign(np.diagonal(r))
        signs[signs == 0] = 1.0
        factors.append((q * signs) @ upper)
    return CpModel(np.asarray(lam, dtype=np.float64), factors)


def add_noise(x, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """``y = x + sigma * z`` with i.i.d. standard normal ``z``."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    x = np.asarray(x, dtype=np.float64)
    return x + sigma * rng.standard_normal(x.shape)


@dataclass
class ScenarioSpec:
    """One concrete simulation scenario (a single grid point's settings)."""

    dims: Tuple[int, ...]
    rank: int
    sigma: float
    lambda_rule: Union[str, Tuple[float, ...]] = "rank"
    loading: str = "uniform"  # "uniform" | "coherent"
    xi: Optional[float] = None
    replicates: int = 1
    methods: Tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        self.dims = tuple(int(p) for p in self.dims)
        if self.loading not in ("uniform", "coherent"):
            raise ValueError(f"unknown loading rule {self.loading!r}")
        if self.loading == "coherent":
            if self.xi is None:
                raise ValueError("coherent loading requires xi")
            if self.rank > min(self.dims):
                raise ValueError("coherent loading requires rank <= min(dims)")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")

    def lambdas(self) -> np.ndarray:
        return resolve_lambdas(self.lambda_rule, self.rank)

    def draw_model(self, rng: np.random.Generator) -> CpModel:
        if self.loading == "coherent":
            return gen_coherent_model(self.dims, self.rank, float(self.xi), self.lambdas(), rng)
        return gen_uniform_model(self.dims, self.rank, self.lambdas(), rng)

    def to_mapping(self) -> dict:
        lam = self.lambda_rule
        if not isinstance(lam, str):
            lam = ",".join(repr(float(v)) for v in lam)
        out = {
            "dims": "x".join(str(p) for p in self.dims),
            "rank": str(self.rank),
            "sigma": repr(float(self.sigma)),
            "lambda": lam,
            "loading": self.loading,
            "replicates": str(self.replicates),
            "methods": ",".join(self.methods),
        }
        if self.xi is not None:
            out["xi"] = repr(float(self.xi))
        return out

    @classmethod
    def from_mapping(cls, mapping: dict) -> "ScenarioSpec":
        lam: Union[str, Tuple[float, ...]] = mapping.get("lambda", "rank")
        if isinstance(lam, str) and lam not in ("rank", "one"):
            lam = tuple(float(v) for v in lam.split(","))
        xi = mapping.get("xi")
        return cls(
            dims=tuple(int(p) for p in str(mapping["dims"]).split("x")),
            rank=int(mapping["rank"]),
            sigma=float(mapping["sigma"]),
            lambda_rule=lam,
            loading=mapping.get("loading", "uniform"),
            xi=None if xi is None else float(xi),
            replicates=int(mapping.get("replicates", 1)),
            methods=tuple(m for m in str(mapping.get("methods", "")).split(",") if m),
        )
