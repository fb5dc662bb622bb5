"""Exact sampling from a multivariate Bernoulli variable and random sparse models."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import ValidationError
from .lattice import MAX_P
from .model import ProbabilityVector, ThetaVector, normalize_theta, probs_from_theta


def make_rng(seed=None, *stream: int) -> np.random.Generator:
    """Generator for ``seed`` and an optional stream path.

    ``make_rng(master, r, k)`` is the ``k``-th stream of replicate ``r``; the
    streams are independent and depend only on their integer path.
    """
    if isinstance(seed, np.random.Generator):
        if stream:
            raise ValidationError("stream paths need an integer seed")
        return seed
    if seed is None:
        return np.random.default_rng()
    # spawn_key keeps paths of different lengths apart, e.g. (s,) vs (s, 0)
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(map(int, stream))))


def as_samples(data) -> np.ndarray:
    """Validate an ``n x p`` binary matrix and return it as ``uint8``."""
    x = np.asarray(data)
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
        raise ValidationError(f"samples must be a non-empty n x p matrix, got shape {x.shape}")
    if not np.all((x == 0) | (x == 1)):
        raise ValidationError("samples must contain only 0 and 1")
    return x.astype(np.uint8)


def outcomes_to_rows(outcomes: np.ndarray, p: int) -> np.ndarray:
    """Outcome masks to binary rows; bit ``i - 1`` becomes column ``i - 1``."""
    return ((np.asarray(outcomes)[:, None] >> np.arange(p)) & 1).astype(np.uint8)


def rows_to_outcomes(rows) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.int64)
    return rows @ (1 << np.arange(rows.shape[1], dtype=np.int64))


def sample(model, n: int, seed=None) -> np.ndarray:
    """Draw ``n`` i.i.d. rows by inverse-CDF over all ``2**p`` outcomes."""
    if n < 1:
        raise ValidationError("n must be at least 1")
    if isinstance(model, ThetaVector):
        pi = probs_from_theta(model)
    elif isinstance(model, ProbabilityVector):
        pi = model
    else:
        raise ValidationError(f"cannot sample from {type(model).__name__}")
    if pi.p > MAX_P:
        raise ValidationError(f"p={pi.p} exceeds the lattice cap")
    rng = make_rng(seed)
    cdf = np.cumsum(pi.values)
    cdf[-1] = 1.0
    outcomes = np.searchsorted(cdf, rng.random(n), side="right")
    return outcomes_to_rows(outcomes, pi.p)


@dataclass(frozen=True)
class ModelSpec:
    """Random pairwise model: ``nonzero_pairs`` couplings of ``+-coupling``."""

    p: int
    nonzero_pairs: int
    coupling: float = 0.5
    seed: int = 0
    random_singletons: bool = False

    def __post_init__(self):
        if self.p < 2:
            raise ValidationError("need at least two nodes")
        if not 0 <= self.nonzero_pairs <= self.p * (self.p - 1) // 2:
            raise ValidationError(
                f"{self.nonzero_pairs} nonzero pairs requested but only "
                f"{self.p * (self.p - 1) // 2} pairs exist for p={self.p}"
            )


def random_pairwise_model(spec: ModelSpec, rng: np.random.Generator | None = None) -> ThetaVector:
    """Pairwise model with uniformly chosen support and mixed-sign couplings.

    Singleton terms are zero unless ``spec.random_singletons`` is set, in
    which case each is ``+-coupling`` with equal probability.  ``theta[0]`` is
    set by normalization.
    """
    rng = make_rng(spec.seed) if rng is None else rng
    pairs = list(combinations(range(spec.p), 2))
    chosen = rng.choice(len(pairs), size=spec.nonzero_pairs, replace=False)
    signs = rng.choice([-1.0, 1.0], size=spec.nonzero_pairs)
    values = np.zeros(1 << spec.p)
    for k, s in zip(sorted(chosen), signs):
        i, j = pairs[k]
        values[(1 << i) | (1 << j)] = s * spec.coupling
    if spec.random_singletons:
        signs = rng.choice([-1.0, 1.0], size=spec.p)
        for i in range(spec.p):
            values[1 << i] = signs[i] * spec.coupling
    return normalize_theta(ThetaVector(values))[0]
