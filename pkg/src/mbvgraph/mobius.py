"""Closed-form estimation of theta by Moebius inversion of log frequencies.

The estimator has three stages: count how often each outcome occurs,
Moebius-transform the log of the (smoothed) frequencies, then zero out
small entries.  The pairwise support of the result is the graph estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError, ZeroFrequencyError
from .lattice import lattice_dim, mask_of, mobius_transform, nodes_of, popcounts, subset_parity_split, submasks
from .model import GraphEstimate, ProbabilityVector, ThetaVector, normalize_theta, pairwise_graph
from .sampler import as_samples, rows_to_outcomes

DEFAULT_ALPHA = 0.5
DEFAULT_QUANTILES = (0.2, 0.4, 0.5, 0.6, 0.7)


@dataclass(frozen=True, eq=False)
class FrequencyVector:
    """Outcome counts over all subsets plus an additive smoothing constant.

    ``counts`` may be fractional, which lets population probabilities be fed
    through the estimator unchanged (see :meth:`from_probs`).
    """

    counts: np.ndarray
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        counts = np.array(self.counts, dtype=float)
        lattice_dim(counts.size)
        if counts.ndim != 1 or np.any(counts < 0) or not np.all(np.isfinite(counts)):
            raise ValidationError("counts must be a finite non-negative vector")
        if self.alpha < 0:
            raise ValidationError("smoothing constant must be non-negative")
        if counts.sum() <= 0:
            raise ValidationError("no observations")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_probs(cls, pi: ProbabilityVector, n: float = 1.0) -> FrequencyVector:
        return cls(np.asarray(pi.values) * n, alpha=0.0)

    @property
    def p(self) -> int:
        return self.counts.size.bit_length() - 1

    @property
    def n(self) -> float:
        return float(self.counts.sum())

    @property
    def raw(self) -> np.ndarray:
        return self.counts / self.n

    @property
    def smoothed(self) -> np.ndarray:
        return (self.counts + self.alpha) / (self.n + self.alpha * self.counts.size)

    def log_smoothed(self) -> np.ndarray:
        freq = self.smoothed
        if np.any(freq <= 0):
            empty = [nodes_of(int(m)) for m in np.flatnonzero(freq <= 0)]
            shown = ", ".join(str(set(s)) if s else "{}" for s in empty[:10])
            more = f" and {len(empty) - 10} more" if len(empty) > 10 else ""
            raise ZeroFrequencyError(
                f"{len(empty)} outcome(s) never observed ({shown}{more}); "
                f"use a positive smoothing constant or more samples (n={self.n:g}, p={self.p})",
                subsets=empty,
            )
        return np.log(freq)


def empirical_frequencies(data, alpha: float = DEFAULT_ALPHA) -> FrequencyVector:
    """Count each row's outcome (the set of nodes equal to one)."""
    x = as_samples(data)
    lattice_dim(1 << x.shape[1])
    counts = np.bincount(rows_to_outcomes(x), minlength=1 << x.shape[1])
    return FrequencyVector(counts, alpha=alpha)


def estimate_theta(freq: FrequencyVector) -> ThetaVector:
    """Moebius transform of the log smoothed frequencies."""
    return ThetaVector(mobius_transform(freq.log_smoothed()))


def estimate_theta_parity(freq: FrequencyVector) -> ThetaVector:
    """Same estimate via the even/odd subset ratio form.

    ``theta[D] = sum(log f[even subset]) - sum(log f[odd subset])``, where
    parity refers to ``|D - D'|``.  Costs ``O(3**p)``; kept as a cross-check.
    """
    logf = freq.log_smoothed()
    out = np.empty_like(logf)
    for mask in range(logf.size):
        even, odd = subset_parity_split(mask)
        out[mask] = logf[even].sum() - logf[odd].sum()
    return ThetaVector(out)


def theta_bound(freq: FrequencyVector, nodes) -> float:
    """Upper bound ``2**(|D|-1) * log(max / min)`` on ``|theta_hat[D]|``.

    ``max`` and ``min`` range over the smoothed frequencies of the subsets of
    ``D``.  Defined for non-empty ``D`` only.
    """
    mask = nodes if isinstance(nodes, (int, np.integer)) else mask_of(nodes)
    size = bin(int(mask)).count("1")
    if size == 0:
        raise ValidationError("the bound is defined for non-empty sets")
    logf = freq.log_smoothed()[submasks(int(mask))]
    return float(2 ** (size - 1) * (logf.max() - logf.min()))


@dataclass(frozen=True)
class ThresholdRule:
    """How to zero small entries of an estimate.

    ``kind`` is one of ``none``, ``quantile`` (``value`` = q in [0, 1)),
    ``absolute`` (``value`` = cutoff t >= 0) or ``degree`` (``value`` = max
    neighbours per node).  ``scope`` is ``pairwise`` or ``all`` (every
    non-empty set).  The empty-set entry is never thresholded.
    """

    kind: str = "none"
    value: float = 0.0
    scope: str = "pairwise"

    def __post_init__(self):
        if self.kind not in ("none", "quantile", "absolute", "degree"):
            raise ValidationError(f"unknown threshold kind {self.kind!r}")
        if self.scope not in ("pairwise", "all"):
            raise ValidationError(f"unknown threshold scope {self.scope!r}")
        if self.kind == "quantile" and not 0 <= self.value < 1:
            raise ValidationError("quantile must lie in [0, 1)")
        if self.kind == "absolute" and self.value < 0:
            raise ValidationError("absolute cutoff must be non-negative")
        if self.kind == "degree" and (self.value < 0 or self.value != int(self.value)):
            raise ValidationError("degree must be a non-negative integer")


def _scope_selector(p: int, scope: str) -> np.ndarray:
    sizes = popcounts(p)
    return sizes == 2 if scope == "pairwise" else sizes >= 1


def quantile_cutoff(magnitudes, q: float) -> float | None:
    """Inverse-CDF quantile ``min{x : fraction of values <= x is >= q}``.

    Returns ``None`` for ``q == 0`` (nothing is cut).  Zeroing every value
    ``<= cutoff`` removes the ``ceil(q * m)`` smallest plus any ties.
    """
    mags = np.sort(np.asarray(magnitudes, dtype=float))
    k = math.ceil(q * mags.size - 1e-9)
    if k <= 0 or mags.size == 0:
        return None
    return float(mags[k - 1])


def _degree_keep(pair_matrix: np.ndarray, d: int) -> np.ndarray:
    p = pair_matrix.shape[0]
    keep = np.zeros((p, p), dtype=bool)
    mags = np.abs(pair_matrix)
    for j in range(p):
        others = [i for i in range(p) if i != j]
        order = sorted(others, key=lambda i: (-mags[j, i], i))
        for i in order[:d]:
            if mags[j, i] > 0:
                keep[i, j] = keep[j, i] = True
    return keep


def apply_threshold(th: ThetaVector, rule: ThresholdRule) -> ThetaVector:
    """Zero the scoped entries selected by ``rule`` and renormalize via ``theta[0]``."""
    if rule.kind == "none":
        return th
    values = th.values.copy()
    p = th.p
    if rule.kind == "degree":
        keep = _degree_keep(th.pairwise_matrix(), int(rule.value))
        for i in range(p):
            for j in range(i + 1, p):
                if not keep[i, j]:
                    values[(1 << i) | (1 << j)] = 0.0
    else:
        scoped = _scope_selector(p, rule.scope)
        mags = np.abs(values)
        if rule.kind == "quantile":
            cutoff = quantile_cutoff(mags[scoped], rule.value)
        else:
            cutoff = rule.value
        if cutoff is not None:
            values[scoped & (mags <= cutoff)] = 0.0
    return normalize_theta(ThetaVector(values))[0]


def count_pairs(th: ThetaVector) -> int:
    return len(pairwise_graph(th, tol=0.0).edges)


def choose_quantile(
    th: ThetaVector,
    quantiles: Sequence[float] = DEFAULT_QUANTILES,
    prior_edges: int | None = None,
    scope: str = "pairwise",
) -> tuple[float, list[tuple[float, int]]]:
    """Pick the quantile whose surviving edge count is closest to ``prior_edges``.

    Returns the chosen quantile and the full ``(quantile, edges)`` path.  Ties
    go to the smaller quantile.  Without a prior the smallest quantile wins.
    """
    if not quantiles:
        raise ValidationError("no candidate quantiles")
    path = [(q, count_pairs(apply_threshold(th, ThresholdRule("quantile", q, scope)))) for q in sorted(quantiles)]
    if prior_edges is None:
        return path[0][0], path
    best = min(path, key=lambda item: (abs(item[1] - prior_edges), item[0]))
    return best[0], path


def truncate_order(th: ThetaVector, max_order: int) -> ThetaVector:
    """Zero every entry of order above ``max_order`` and renormalize."""
    values = th.values.copy()
    values[popcounts(th.p) > max_order] = 0.0
    return normalize_theta(ThetaVector(values))[0]


def fit_mobius(
    data,
    rule: ThresholdRule | None = None,
    alpha: float = DEFAULT_ALPHA,
    max_order: int | None = None,
) -> tuple[ThetaVector, GraphEstimate]:
    """Estimate theta and the graph from binary samples.

    ``max_order`` encodes prior knowledge that interactions above that order
    vanish (``2`` for a pairwise model); those entries are zeroed before
    thresholding.
    """
    x = as_samples(data)
    if x.shape[0] <= x.shape[1]:
        raise ValidationError(f"need more samples than nodes (n={x.shape[0]}, p={x.shape[1]})")
    th = estimate_theta(empirical_frequencies(x, alpha))
    if max_order is not None:
        th = truncate_order(th, max_order)
    if rule is not None:
        th = apply_threshold(th, rule)
    return th, pairwise_graph(th, tol=0.0)
