"""Neighbourhood selection by l1-penalized logistic regression (pairwise model).

Each node is regressed on all others with an unpenalized intercept; the
penalty is chosen per node by stratified K-fold cross-validation and the two
directional estimates of each pair are merged by a symmetrization rule.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConvergenceError, ValidationError
from .model import GraphEstimate, ThetaVector, normalize_theta
from .sampler import as_samples, make_rng

DEFAULT_LAMBDA_MIN = 1e-3
DEFAULT_N_LAMBDAS = 20


@dataclass(frozen=True)
class SolverConfig:
    """Settings for the accelerated proximal-gradient solver.

    Convergence needs both a relative objective decrease below ``tol`` and a
    KKT residual (sup-norm of the minimal subgradient) below ``kkt_tol``.
    The step starts at ``initial_step_scale`` times the inverse Lipschitz
    bound and is shortened by ``backtrack`` whenever the quadratic upper bound
    fails.
    """

    max_iter: int = 50_000
    tol: float = 1e-12
    kkt_tol: float = 1e-6
    backtrack: float = 2.0
    initial_step_scale: float = 4.0

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValidationError("max_iter must be at least 1")
        if self.tol <= 0 or self.kkt_tol <= 0:
            raise ValidationError("tolerances must be positive")
        if self.backtrack <= 1:
            raise ValidationError("backtracking factor must exceed 1")


@dataclass(frozen=True, eq=False)
class NodeRegressionProblem:
    """Response node ``j`` (1-based), its design, response and penalty."""

    j: int
    design: np.ndarray
    response: np.ndarray
    lam: float

    def __post_init__(self):
        x = np.asarray(self.design, dtype=float)
        y = np.asarray(self.response, dtype=float).ravel()
        if x.ndim != 2 or x.shape[0] != y.size or y.size == 0:
            raise ValidationError("design must be n x k with one response per row")
        if not (np.all((x == 0) | (x == 1)) and np.all((y == 0) | (y == 1))):
            raise ValidationError("design and response must be binary")
        if self.lam < 0:
            raise ValidationError("penalty weight must be non-negative")
        object.__setattr__(self, "design", x)
        object.__setattr__(self, "response", y)

    @classmethod
    def from_samples(cls, data, j: int, lam: float) -> NodeRegressionProblem:
        x = as_samples(data)
        if not 1 <= j <= x.shape[1]:
            raise ValidationError(f"node {j} outside 1..{x.shape[1]}")
        return cls(j, np.delete(x, j - 1, axis=1), x[:, j - 1], lam)


@dataclass(frozen=True)
class NodeFit:
    intercept: float
    coef: np.ndarray
    objective: float
    iterations: int
    history: tuple[float, ...] = ()


class LNMFit(NamedTuple):
    graph: GraphEstimate
    raw: np.ndarray
    intercepts: np.ndarray
    lambdas: np.ndarray


def _softplus(z):
    return np.logaddexp(0.0, z)


def _sigmoid(z):
    return np.exp(-_softplus(-z))


class _Weighted:
    """Duplicate rows pooled into weights; the objective is unchanged."""

    def __init__(self, design: np.ndarray, response: np.ndarray):
        rows, counts = np.unique(np.column_stack([design, response]), axis=0, return_counts=True)
        self.a = np.column_stack([np.ones(len(rows)), rows[:, :-1]])
        self.y = rows[:, -1]
        self.w = counts / response.size
        scaled = self.a * np.sqrt(self.w)[:, None]
        self.lipschitz = max(np.linalg.norm(scaled, 2) ** 2 / 4.0, 1e-12)

    def loss(self, beta):
        eta = self.a @ beta
        return float(self.w @ (_softplus(eta) - self.y * eta))

    def loss_grad(self, beta):
        eta = self.a @ beta
        loss = float(self.w @ (_softplus(eta) - self.y * eta))
        return loss, self.a.T @ (self.w * (_sigmoid(eta) - self.y))


def _prox(beta, thresh):
    out = beta.copy()
    out[1:] = np.sign(beta[1:]) * np.maximum(np.abs(beta[1:]) - thresh, 0.0)
    return out


def kkt_residual(grad: np.ndarray, beta: np.ndarray, lam: float) -> float:
    """Sup-norm distance of ``0`` from the subdifferential at ``beta``.

    ``grad`` is the gradient of the smooth loss, intercept first.
    """
    g = grad[1:]
    b = beta[1:]
    res = np.where(b != 0, np.abs(g + lam * np.sign(b)), np.maximum(np.abs(g) - lam, 0.0))
    return float(max(abs(grad[0]), res.max(initial=0.0)))


def _start(y: np.ndarray, k: int) -> np.ndarray:
    beta = np.zeros(k + 1)
    ybar = y.mean()
    beta[0] = np.log(ybar / (1 - ybar))
    return beta


def _check_response(y: np.ndarray) -> None:
    if y.min() == y.max():
        raise ValidationError("response is constant; the intercept has no finite estimate")


def solve_node(
    problem: NodeRegressionProblem,
    cfg: SolverConfig = SolverConfig(),
    warm_start: np.ndarray | None = None,
    _pooled: _Weighted | None = None,
) -> NodeFit:
    """Minimize mean logistic loss plus ``lam * ||coef||_1`` (intercept free).

    Uses monotone FISTA with backtracking, so the recorded objective
    sequence never increases.  Raises :class:`ConvergenceError` carrying the
    last iterate if ``cfg.max_iter`` is exhausted.
    """
    y = problem.response
    _check_response(y)
    data = _pooled or _Weighted(problem.design, y)
    lam = problem.lam
    x = _start(y, problem.design.shape[1]) if warm_start is None else np.array(warm_start, dtype=float)

    def objective(beta):
        return data.loss(beta) + lam * np.abs(beta[1:]).sum()

    fx = objective(x)
    history = [fx]
    # at lam >= lambda_max the intercept-only start is already optimal; iterating
    # from it would only add rounding-level coefficients
    if kkt_residual(data.loss_grad(x)[1], x, lam) <= cfg.kkt_tol:
        return NodeFit(float(x[0]), x[1:].copy(), fx, 0, tuple(history))
    lip = data.lipschitz / cfg.initial_step_scale
    yk, t = x.copy(), 1.0
    residual = np.inf
    for it in range(1, cfg.max_iter + 1):
        fy, gy = data.loss_grad(yk)
        while True:
            z = _prox(yk - gy / lip, lam / lip)
            d = z - yk
            fz = data.loss(z)
            if fz <= fy + gy @ d + 0.5 * lip * (d @ d) + 1e-14 * abs(fy):
                break
            lip *= cfg.backtrack
        fz += lam * np.abs(z[1:]).sum()
        if fz <= fx:
            x_prev, x = x, z
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            yk = x + ((t - 1.0) / t_next) * (x - x_prev)
            t = t_next
            decrease = fx - fz
            fx = fz
        else:
            # rejected step keeps the iterate and restarts momentum
            yk, t = x.copy(), 1.0
            decrease = 0.0
        history.append(fx)
        if decrease <= cfg.tol * (1.0 + abs(fx)):
            residual = kkt_residual(data.loss_grad(x)[1], x, lam)
            if residual <= cfg.kkt_tol:
                return NodeFit(float(x[0]), x[1:].copy(), fx, it, tuple(history))
    raise ConvergenceError(
        f"node {problem.j}: no convergence in {cfg.max_iter} iterations (KKT residual {residual:.2e})",
        iterate=x,
        gap=residual,
    )


def lambda_max(design, response) -> float:
    """Smallest penalty whose solution has every coefficient at zero."""
    x = np.asarray(design, dtype=float)
    y = np.asarray(response, dtype=float)
    return float(np.abs(x.T @ (y - y.mean())).max(initial=0.0) / y.size)


def default_grid(design, response, n_lambdas: int = DEFAULT_N_LAMBDAS, lam_min: float = DEFAULT_LAMBDA_MIN) -> np.ndarray:
    """Decreasing log-spaced grid from ``lambda_max`` down to ``lam_min``."""
    top = max(lambda_max(design, response), lam_min)
    return np.geomspace(top, lam_min, n_lambdas)


def solve_path(problem: NodeRegressionProblem, grid: Sequence[float], cfg: SolverConfig = SolverConfig()) -> list[NodeFit]:
    """Warm-started fits along ``grid`` (returned in the order given)."""
    pooled = _Weighted(problem.design, problem.response)
    order = np.argsort(-np.asarray(grid, dtype=float), kind="stable")
    fits: list[NodeFit | None] = [None] * len(order)
    beta = None
    for k in order:
        sub = NodeRegressionProblem(problem.j, problem.design, problem.response, float(grid[k]))
        fit = solve_node(sub, cfg, warm_start=beta, _pooled=pooled)
        beta = np.concatenate([[fit.intercept], fit.coef])
        fits[k] = fit
    return fits


def stratified_folds(response, folds: int, rng: np.random.Generator) -> np.ndarray:
    """Fold label per row, with each class spread evenly over the folds."""
    y = np.asarray(response)
    labels = np.empty(y.size, dtype=np.int64)
    offset = 0
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(idx.size)]
        labels[idx] = (np.arange(idx.size) + offset) % folds
        offset += idx.size
    return labels


def _heldout_nll(fit: NodeFit, x: np.ndarray, y: np.ndarray) -> float:
    eta = fit.intercept + x @ fit.coef
    return float(np.mean(_softplus(eta) - y * eta))


def cross_validate_lambda(
    data,
    j: int,
    grid: Sequence[float] | None = None,
    folds: int = 10,
    seed=0,
    cfg: SolverConfig = SolverConfig(),
    selection: str = "min",
    return_curve: bool = False,
):
    """Pick a grid penalty by mean held-out negative log-likelihood.

    ``selection="min"`` takes the minimizer; ``"1se"`` takes the largest
    penalty whose mean loss is within one standard error (across folds) of
    that minimum.  Rows are split into ``folds`` stratified folds from ``seed``.  A constant
    response (overall or within a training split) yields the largest grid
    value with a warning.  Ties go to the larger penalty.
    """
    x = as_samples(data)
    if x.shape[0] < folds:
        raise ValidationError(f"need at least {folds} rows for {folds}-fold CV")
    if selection not in ("min", "1se"):
        raise ValidationError(f"unknown selection rule {selection!r}")
    if folds < 2:
        raise ValidationError("need at least two folds")
    design = np.delete(x, j - 1, axis=1).astype(float)
    y = x[:, j - 1].astype(float)
    grid = default_grid(design, y) if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0 or np.any(grid < 0):
        raise ValidationError("penalty grid must be a non-empty list of non-negative values")
    fallback = float(grid.max())
    if grid.size == 1:
        return (fallback, np.full(1, np.nan)) if return_curve else fallback
    if y.min() == y.max():
        warnings.warn(f"node {j}: constant response, using the largest penalty", stacklevel=2)
        return (fallback, np.full(grid.size, np.nan)) if return_curve else fallback

    labels = stratified_folds(y, folds, make_rng(seed))
    losses = np.zeros((folds, grid.size))
    for k in range(folds):
        train, test = labels != k, labels == k
        if y[train].min() == y[train].max():
            warnings.warn(f"node {j}: constant response in a training split, using the largest penalty", stacklevel=2)
            return (fallback, np.full(grid.size, np.nan)) if return_curve else fallback
        problem = NodeRegressionProblem(j, design[train], y[train], 0.0)
        for g, fit in enumerate(solve_path(problem, grid, cfg)):
            losses[k, g] = _heldout_nll(fit, design[test], y[test])
    curve = losses.mean(axis=0)
    best = min(range(grid.size), key=lambda g: (curve[g], -grid[g]))
    if selection == "1se":
        limit = curve[best] + losses[:, best].std(ddof=1) / np.sqrt(folds)
        best = max((g for g in range(grid.size) if curve[g] <= limit), key=lambda g: grid[g])
    return (float(grid[best]), curve) if return_curve else float(grid[best])


def symmetrize(raw, rule: str = "min") -> GraphEstimate:
    """Merge ``raw[i, j]`` (node ``i``'s coefficient on ``j``) with ``raw[j, i]``.

    ``min`` keeps the smaller-magnitude value, so a zero on either side
    removes the edge; ``max`` keeps the larger one.  Equal magnitudes take
    ``raw[j, i]``.
    """
    w = np.asarray(raw, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValidationError("raw coefficients must form a square matrix")
    if rule not in ("min", "max"):
        raise ValidationError(f"unknown symmetrization rule {rule!r}")
    a, b = np.abs(w), np.abs(w.T)
    pick_own = a < b if rule == "min" else a > b
    merged = np.where(pick_own, w, w.T)
    np.fill_diagonal(merged, 0.0)
    return GraphEstimate.from_matrix(np.triu(merged) + np.triu(merged, 1).T)


def fit_lnm(
    data,
    grid: str | Sequence[float] = "auto",
    cfg: SolverConfig = SolverConfig(),
    seed=0,
    folds: int = 10,
    rule: str = "min",
    selection: str = "min",
) -> LNMFit:
    """Cross-validate and fit every node, then symmetrize.

    ``grid`` is ``"auto"`` (per-node default grid) or an explicit list.  Node
    ``j`` uses the CV stream ``(seed, j)``.  Returns the graph, the raw
    ``p x p`` coefficient matrix (row = response node, zero diagonal), the
    intercepts and the selected penalties.
    """
    x = as_samples(data)
    n, p = x.shape
    if n < folds:
        raise ValidationError(f"need at least {folds} rows for {folds}-fold CV")
    raw = np.zeros((p, p))
    intercepts = np.zeros(p)
    lambdas = np.zeros(p)
    for j in range(1, p + 1):
        design = np.delete(x, j - 1, axis=1).astype(float)
        y = x[:, j - 1].astype(float)
        node_grid = default_grid(design, y) if isinstance(grid, str) else np.asarray(grid, dtype=float)
        if isinstance(grid, str) and grid != "auto":
            raise ValidationError(f"unknown grid specification {grid!r}")
        if y.min() == y.max():
            warnings.warn(f"node {j}: constant response, coefficients set to zero", stacklevel=2)
            ones = y.sum()
            intercepts[j - 1] = np.log((ones + 0.5) / (n - ones + 0.5))
            lambdas[j - 1] = node_grid.max()
            continue
        seed_j = make_rng(seed, j) if not isinstance(seed, np.random.Generator) else seed
        lam = cross_validate_lambda(x, j, node_grid, folds=folds, seed=seed_j, cfg=cfg, selection=selection)
        fit = solve_node(NodeRegressionProblem(j, design, y, lam), cfg)
        others = [i for i in range(p) if i != j - 1]
        raw[j - 1, others] = fit.coef
        intercepts[j - 1] = fit.intercept
        lambdas[j - 1] = lam
    return LNMFit(symmetrize(raw, rule), raw, intercepts, lambdas)


def theta_from_lnm(fit: LNMFit) -> ThetaVector:
    """Pairwise theta: intercepts as first-order terms, symmetrized pairs, normalized."""
    p = fit.raw.shape[0]
    values = np.zeros(1 << p)
    for i in range(p):
        values[1 << i] = fit.intercepts[i]
    for (i, j), w in fit.graph.weights.items():
        values[(1 << (i - 1)) | (1 << (j - 1))] = w
    return normalize_theta(ThetaVector(values))[0]
