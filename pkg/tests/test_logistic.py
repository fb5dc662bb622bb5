import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mbvgraph.errors import ConvergenceError, ValidationError
from mbvgraph.logistic import (
    NodeRegressionProblem,
    SolverConfig,
    cross_validate_lambda,
    default_grid,
    fit_lnm,
    lambda_max,
    solve_node,
    solve_path,
    stratified_folds,
    symmetrize,
    theta_from_lnm,
)
from mbvgraph.model import ThetaVector
from mbvgraph.sampler import ModelSpec, random_pairwise_model, sample


def smooth_loss(problem, beta):
    eta = beta[0] + problem.design @ beta[1:]
    return float(np.mean(np.logaddexp(0.0, eta) - problem.response * eta))


def fd_gradient(problem, beta, h=1e-6):
    g = np.zeros_like(beta)
    for k in range(beta.size):
        e = np.zeros_like(beta)
        e[k] = h
        g[k] = (smooth_loss(problem, beta + e) - smooth_loss(problem, beta - e)) / (2 * h)
    return g


def subgradient_violation(problem, fit):
    beta = np.concatenate([[fit.intercept], fit.coef])
    g = fd_gradient(problem, beta)
    worst = abs(g[0])
    for gk, bk in zip(g[1:], beta[1:]):
        if bk != 0:
            worst = max(worst, abs(gk + problem.lam * np.sign(bk)))
        else:
            worst = max(worst, abs(gk) - problem.lam)
    return worst


def problem_from_model(seed, n, lam, p=5, j=1):
    th = random_pairwise_model(ModelSpec(p, min(6, p * (p - 1) // 2), seed=seed))
    return NodeRegressionProblem.from_samples(sample(th, n, seed=seed + 1000), j, lam)


class TestProblem:
    def test_rejects_non_binary(self):
        with pytest.raises(ValidationError):
            NodeRegressionProblem(1, np.array([[2.0]]), np.array([1.0]), 0.1)

    def test_rejects_negative_penalty(self):
        with pytest.raises(ValidationError):
            NodeRegressionProblem(1, np.zeros((2, 1)), np.array([0, 1]), -1.0)

    def test_constant_response(self):
        with pytest.raises(ValidationError):
            solve_node(NodeRegressionProblem(1, np.eye(2), np.ones(2), 0.1))


class TestSolveNode:
    def test_large_penalty_gives_log_odds(self):
        problem = problem_from_model(0, 400, 0.0)
        ybar = problem.response.mean()
        big = NodeRegressionProblem(1, problem.design, problem.response, 2 * lambda_max(problem.design, problem.response) + 1)
        fit = solve_node(big)
        assert np.all(fit.coef == 0)
        assert fit.intercept == pytest.approx(math.log(ybar / (1 - ybar)), abs=1e-8)

    def test_lambda_max_is_tight(self):
        problem = problem_from_model(1, 400, 0.0)
        top = lambda_max(problem.design, problem.response)
        above = solve_node(NodeRegressionProblem(1, problem.design, problem.response, top * 1.001))
        below = solve_node(NodeRegressionProblem(1, problem.design, problem.response, top * 0.9))
        assert np.all(above.coef == 0)
        assert np.any(below.coef != 0)

    def test_unpenalized_recovers_population(self):
        th = ThetaVector.from_terms(2, {(1,): 0.3, (2,): -0.4, (1, 2): 0.8})
        x = sample(th, 100_000, seed=5)
        fit = solve_node(NodeRegressionProblem.from_samples(x, 1, 0.0))
        assert fit.intercept == pytest.approx(0.3, abs=0.05)
        assert fit.coef[0] == pytest.approx(0.8, abs=0.05)

    @pytest.mark.parametrize("seed", range(5))
    def test_kkt_against_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        problem = problem_from_model(seed, int(rng.integers(60, 800)), float(rng.uniform(0.0, 0.08)))
        assert subgradient_violation(problem, solve_node(problem)) < 1e-4

    def test_objective_non_increasing(self):
        fit = solve_node(problem_from_model(2, 500, 0.01))
        assert np.all(np.diff(fit.history) <= 1e-15)

    def test_matches_long_reference(self):
        problem = problem_from_model(3, 500, 0.02)
        fit = solve_node(problem)
        ref = solve_node(problem, SolverConfig(max_iter=500_000, tol=1e-15, kkt_tol=1e-7))
        assert fit.objective == pytest.approx(ref.objective, abs=1e-9)

    def test_iteration_cap(self):
        problem = problem_from_model(4, 300, 0.001)
        with pytest.raises(ConvergenceError) as info:
            solve_node(problem, SolverConfig(max_iter=2))
        assert info.value.iterate.shape == (5,)

    def test_penalty_monotone_sparsity(self):
        problem = problem_from_model(6, 600, 0.0)
        grid = default_grid(problem.design, problem.response)
        fits = solve_path(problem, grid)
        nnz = [np.count_nonzero(f.coef) for f in fits]
        assert nnz[0] == 0
        assert all(a <= b for a, b in zip(nnz, nnz[1:]))

    def test_grid_shape(self):
        problem = problem_from_model(7, 300, 0.0)
        grid = default_grid(problem.design, problem.response)
        assert grid.size == 20 and grid[-1] == pytest.approx(1e-3) and np.all(np.diff(grid) < 0)


class TestSymmetrize:
    def test_min_rule(self):
        raw = np.array([[0, 0.3], [-0.5, 0]])
        assert symmetrize(raw, "min").weights == {(1, 2): 0.3}

    def test_zero_versus_nonzero(self):
        raw = np.array([[0, 0.0], [0.4, 0]])
        assert symmetrize(raw, "min").edges == frozenset()
        assert symmetrize(raw, "max").weights == {(1, 2): 0.4}

    @settings(max_examples=50, deadline=None)
    @given(st.integers(2, 6), st.integers(0, 2**32 - 1), st.sampled_from(["min", "max"]))
    def test_properties(self, p, seed, rule):
        rng = np.random.default_rng(seed)
        raw = rng.normal(size=(p, p)) * (rng.random((p, p)) < 0.6)
        np.fill_diagonal(raw, 0)
        g = symmetrize(raw, rule)
        assert symmetrize(g.matrix(), rule).weights == g.weights
        for i in range(p):
            for j in range(i + 1, p):
                both = raw[i, j] != 0 and raw[j, i] != 0
                either = raw[i, j] != 0 or raw[j, i] != 0
                assert g.has_edge(i + 1, j + 1) == (both if rule == "min" else either)

    def test_symmetric_input_unchanged(self):
        m = np.array([[0, 0.2, -0.1], [0.2, 0, 0], [-0.1, 0, 0]])
        for rule in ("min", "max"):
            assert np.array_equal(symmetrize(m, rule).matrix(), m)


class TestCrossValidation:
    def test_single_value_grid(self):
        x = sample(random_pairwise_model(ModelSpec(4, 2, seed=0)), 100, seed=0)
        assert cross_validate_lambda(x, 1, [0.05]) == 0.05

    def test_deterministic(self):
        x = sample(random_pairwise_model(ModelSpec(4, 3, seed=1)), 300, seed=1)
        assert cross_validate_lambda(x, 2, seed=4) == cross_validate_lambda(x, 2, seed=4)

    def test_folds_are_stratified(self):
        y = np.array([1] * 23 + [0] * 77)
        labels = stratified_folds(y, 10, np.random.default_rng(0))
        ones = np.bincount(labels[y == 1], minlength=10)
        assert ones.max() - ones.min() <= 1
        sizes = np.bincount(labels, minlength=10)
        assert sizes.max() - sizes.min() <= 1

    def test_constant_response_warns(self):
        x = np.column_stack([np.ones(50, dtype=int), np.arange(50) % 2])
        with pytest.warns(UserWarning):
            assert cross_validate_lambda(x, 1, [0.1, 0.01]) == 0.1

    def test_empty_graph_prefers_large_penalties(self):
        th = ThetaVector.from_terms(5, {})
        top_half = 0
        for seed in range(10):
            x = sample(th, 2000, seed=seed)
            design, y = np.delete(x, 0, axis=1), x[:, 0]
            grid = default_grid(design, y)
            lam = cross_validate_lambda(x, 1, grid, seed=seed)
            top_half += lam >= np.median(grid)
        assert top_half >= 6


class TestFitLNM:
    def test_small_n_runs(self):
        x = sample(random_pairwise_model(ModelSpec(5, 6, seed=0)), 50, seed=0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            fit = fit_lnm(x)
        assert fit.raw.shape == (5, 5) and np.all(np.diag(fit.raw) == 0)

    @pytest.mark.slow
    def test_empty_graph_mostly_empty(self):
        th = ThetaVector.from_terms(5, {})
        empty = sum(len(fit_lnm(sample(th, 2000, seed=s), seed=s, selection="1se").graph.edges) == 0 for s in range(10))
        assert empty >= 8

    def test_theta_from_fit(self):
        x = sample(random_pairwise_model(ModelSpec(4, 3, seed=2)), 400, seed=2)
        fit = fit_lnm(x, seed=0)
        th = theta_from_lnm(fit)
        assert th.is_normalized()
        for (i, j), w in fit.graph.weights.items():
            assert th[(i, j)] == w
        assert np.all(th.values[np.array([bin(m).count("1") for m in range(16)]) >= 3] == 0)
