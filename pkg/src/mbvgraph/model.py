"""The two parametrizations of a multivariate Bernoulli variable.

A distribution on ``{0, 1}**p`` is held either as a probability vector
``pi[D] = P(X = 1 exactly on D)`` or as the exponential-family vector ``theta``
with ``log pi = zeta(theta)``.  ``theta[0]`` (the empty set) is the log
normalizer.  Node labels in the public API are 1-based.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import PositivityError, ThetaOverflowError, ValidationError
from .lattice import (
    lattice_dim,
    mask_of,
    mobius_transform,
    nodes_of,
    popcounts,
    submasks,
    zeta_transform,
)

ZERO_TOL = 1e-10
EXP_LIMIT = 700.0


def _frozen_array(values, what: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise ValidationError(f"{what} must be a flat vector")
    p = lattice_dim(arr.size)
    if p < 1:
        raise ValidationError(f"{what} needs at least one node")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ProbabilityVector:
    """Outcome probabilities ``pi[D]`` for every subset ``D`` (mask order)."""

    values: np.ndarray

    def __post_init__(self):
        v = _frozen_array(self.values, "probability vector")
        if not np.all(np.isfinite(v)) or v.min() <= 0.0 or v.max() >= 1.0:
            bad = [nodes_of(int(m)) for m in np.flatnonzero(~((v > 0) & (v < 1)))]
            raise PositivityError(f"probabilities must lie in (0, 1); offending subsets {bad[:8]}")
        if abs(v.sum() - 1.0) > 1e-12:
            raise ValidationError(f"probabilities sum to {v.sum()!r}, not 1")
        object.__setattr__(self, "values", v)

    @property
    def p(self) -> int:
        return self.values.size.bit_length() - 1

    def __getitem__(self, nodes: Iterable[int]) -> float:
        return float(self.values[mask_of(nodes)])


@dataclass(frozen=True, eq=False)
class ThetaVector:
    """Exponential-family parameters ``theta[D]`` for every subset ``D``.

    Construction does not force normalization; see :meth:`normalized`.
    """

    values: np.ndarray

    def __post_init__(self):
        v = _frozen_array(self.values, "theta vector")
        if not np.all(np.isfinite(v)):
            raise ValidationError("theta entries must be finite")
        object.__setattr__(self, "values", v)

    @property
    def p(self) -> int:
        return self.values.size.bit_length() - 1

    def __getitem__(self, nodes: Iterable[int]) -> float:
        return float(self.values[mask_of(nodes)])

    @classmethod
    def from_terms(cls, p: int, terms: Mapping[Iterable[int], float], normalize: bool = True):
        """Build from ``{node set: value}``; omitted sets are zero.

        With ``normalize`` the empty-set entry is recomputed so the
        distribution sums to one.
        """
        values = np.zeros(1 << p)
        for nodes, value in terms.items():
            nodes = tuple(nodes)
            if any(i > p for i in nodes):
                raise ValidationError(f"set {nodes} has a node outside 1..{p}")
            values[mask_of(nodes)] = value
        th = cls(values)
        return normalize_theta(th)[0] if normalize else th

    def log_partition_gap(self) -> float:
        """``log sum exp(zeta(theta))``; zero for a normalized vector."""
        logp = zeta_transform(self.values)
        top = logp.max()
        return float(top + np.log(np.exp(logp - top).sum()))

    def is_normalized(self, tol: float = 1e-10) -> bool:
        return abs(np.expm1(self.log_partition_gap())) <= tol

    def normalized(self) -> ThetaVector:
        return normalize_theta(self)[0]

    def pairwise_matrix(self) -> np.ndarray:
        """Symmetric ``p x p`` matrix of the second-order entries."""
        p = self.p
        out = np.zeros((p, p))
        for i, j in combinations(range(p), 2):
            out[i, j] = out[j, i] = self.values[(1 << i) | (1 << j)]
        return out


@dataclass(frozen=True)
class GraphEstimate:
    """Undirected weighted graph on nodes ``1..p``.

    ``weights`` maps ``(i, j)`` with ``i < j`` to a nonzero value; a pair is an
    edge exactly when it carries a weight.
    """

    p: int
    weights: Mapping[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for (i, j), w in dict(self.weights).items():
            i, j = int(i), int(j)
            if i == j:
                raise ValidationError(f"self-loop at node {i}")
            if i > j:
                i, j = j, i
            if i < 1 or j > self.p:
                raise ValidationError(f"edge ({i}, {j}) outside nodes 1..{self.p}")
            if w != 0:
                clean[(i, j)] = float(w)
        object.__setattr__(self, "weights", dict(sorted(clean.items())))

    @property
    def edges(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.weights)

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.weights

    def neighbors(self, i: int) -> set[int]:
        return {b if a == i else a for a, b in self.weights if i in (a, b)}

    def matrix(self) -> np.ndarray:
        out = np.zeros((self.p, self.p))
        for (i, j), w in self.weights.items():
            out[i - 1, j - 1] = out[j - 1, i - 1] = w
        return out

    @classmethod
    def from_matrix(cls, weights, tol: float = 0.0) -> GraphEstimate:
        """Graph from the upper triangle of a symmetric matrix (``|w| > tol``)."""
        w = np.asarray(weights, dtype=float)
        p = w.shape[0]
        return cls(p, {(i + 1, j + 1): w[i, j] for i, j in combinations(range(p), 2) if abs(w[i, j]) > tol})


def _as_theta(th) -> ThetaVector:
    return th if isinstance(th, ThetaVector) else ThetaVector(th)


def _as_probs(pi) -> ProbabilityVector:
    return pi if isinstance(pi, ProbabilityVector) else ProbabilityVector(pi)


def _log_partition(th: ThetaVector) -> tuple[np.ndarray, float]:
    logp = zeta_transform(th.values)
    if logp.max() > EXP_LIMIT:
        worst = int(np.argmax(logp))
        raise ThetaOverflowError(
            f"log-probability {logp[worst]:.1f} at subset {nodes_of(worst)} exceeds {EXP_LIMIT}"
        )
    top = logp.max()
    return logp, float(top + np.log(np.exp(logp - top).sum()))


def normalize_theta(th: ThetaVector) -> tuple[ThetaVector, float]:
    """Shift the empty-set entry so the distribution sums to one.

    Returns the normalized vector and the shift that was added to ``theta[0]``.
    """
    th = _as_theta(th)
    _, gap = _log_partition(th)
    values = th.values.copy()
    values[0] -= gap
    return ThetaVector(values), -gap


def theta_from_probs(pi) -> ThetaVector:
    """Moebius transform of the entrywise log of a positive probability vector."""
    pi = _as_probs(pi)
    return ThetaVector(mobius_transform(np.log(pi.values)))


def probs_from_theta(th, return_shift: bool = False):
    """``exp(zeta(theta))`` after renormalizing through ``theta[0]``.

    With ``return_shift`` also returns the adjustment applied to ``theta[0]``
    (zero, up to rounding, for an already normalized vector).
    """
    th = _as_theta(th)
    logp, gap = _log_partition(th)
    pi = ProbabilityVector(np.exp(logp - gap))
    return (pi, -gap) if return_shift else pi


def _sigmoid(s: float) -> float:
    if s >= 0:
        return 1.0 / (1.0 + np.exp(-s))
    e = np.exp(s)
    return e / (1.0 + e)


def _rest_mask(p: int, skip: Iterable[int], x_rest) -> int:
    skip = set(skip)
    others = [i for i in range(1, p + 1) if i not in skip]
    x = np.asarray(x_rest).ravel()
    if x.size != len(others):
        raise ValidationError(f"expected an assignment of {len(others)} nodes, got {x.size}")
    if not np.all((x == 0) | (x == 1)):
        raise ValidationError("assignments must be binary")
    return mask_of(i for i, xi in zip(others, x) if xi)


def _check_node(p: int, j: int) -> None:
    if not 1 <= j <= p:
        raise ValidationError(f"node {j} outside 1..{p}")


def conditional_success(th, j: int, x_rest) -> float:
    """``P(X_j = 1 | X_rest = x_rest)`` from the exponential parametrization.

    ``x_rest`` lists the values of the other ``p - 1`` nodes in increasing
    node order.  The logit is ``sum(theta[D] for D containing j whose other
    members are all switched on)``.
    """
    th = _as_theta(th)
    _check_node(th.p, j)
    rest = _rest_mask(th.p, [j], x_rest)
    bit = 1 << (j - 1)
    logit = sum(th.values[sub | bit] for sub in submasks(rest))
    return _sigmoid(float(logit))


def conditional_odds_ratio(pi, i: int, j: int, x_rest) -> float:
    """Odds ratio of ``X_i, X_j`` given the remaining nodes equal ``x_rest``.

    ``x_rest`` covers the ``p - 2`` other nodes in increasing order.  The
    conditioning normalizer cancels, so joint probabilities are used directly.
    """
    pi = _as_probs(pi)
    _check_node(pi.p, i)
    _check_node(pi.p, j)
    if i == j:
        raise ValidationError("odds ratio needs two distinct nodes")
    base = _rest_mask(pi.p, [i, j], x_rest)
    bi, bj = 1 << (i - 1), 1 << (j - 1)
    v = pi.values
    return float(v[base | bi | bj] * v[base] / (v[base | bi] * v[base | bj]))


def independence_query(th, a: Iterable[int], b: Iterable[int], tol: float = ZERO_TOL) -> bool:
    """Whether ``X_A`` and ``X_B`` are independent given the other nodes.

    True iff every ``theta[D]`` with ``D`` meeting both ``A`` and ``B`` is
    within ``tol`` of zero.
    """
    th = _as_theta(th)
    a, b = set(a), set(b)
    if not a or not b:
        raise ValidationError("node sets must be non-empty")
    if a & b:
        raise ValidationError(f"node sets overlap on {sorted(a & b)}")
    for k in a | b:
        _check_node(th.p, k)
    masks = np.arange(th.values.size)
    touching = ((masks & mask_of(a)) != 0) & ((masks & mask_of(b)) != 0)
    return bool(np.all(np.abs(th.values[touching]) <= tol))


def _missing_subset_counts(zero: np.ndarray) -> np.ndarray:
    z = zero.astype(np.int64)
    z[0] = 0
    return zeta_transform(z)


def is_hierarchical(th, tol: float = ZERO_TOL) -> bool:
    """Check that a zero entry forces zeros on all of its supersets."""
    th = _as_theta(th)
    zero = np.abs(th.values) <= tol
    counts = _missing_subset_counts(zero)
    violated = ~zero & (counts > 0)
    violated[0] = False
    return not violated.any()


def hierarchical_closure(support: Iterable[Iterable[int]], p: int) -> set[frozenset[int]]:
    """Largest hierarchical sub-support: drop sets with a missing non-empty subset."""
    present = np.zeros(1 << p, dtype=bool)
    for nodes in support:
        nodes = tuple(nodes)
        if any(not 1 <= i <= p for i in nodes):
            raise ValidationError(f"set {nodes} has a node outside 1..{p}")
        present[mask_of(nodes)] = True
    counts = _missing_subset_counts(~present)
    keep = present & (counts == 0)
    return {frozenset(nodes_of(int(m))) for m in np.flatnonzero(keep)}


def support(th, tol: float = ZERO_TOL) -> set[frozenset[int]]:
    """Sets whose entry exceeds ``tol`` in magnitude (the empty set included if so)."""
    th = _as_theta(th)
    return {frozenset(nodes_of(int(m))) for m in np.flatnonzero(np.abs(th.values) > tol)}


def pairwise_graph(th, tol: float = ZERO_TOL) -> GraphEstimate:
    """Edges are the pairs with ``|theta_ij| > tol``; weights are the entries."""
    th = _as_theta(th)
    return GraphEstimate.from_matrix(th.pairwise_matrix(), tol=tol)


def order_mask(p: int, orders: Iterable[int]) -> np.ndarray:
    """Boolean selector of subsets whose cardinality is in ``orders``."""
    return np.isin(popcounts(p), list(orders))
