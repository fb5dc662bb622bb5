"""Graph and parameter estimation for multivariate Bernoulli variables."""

from .errors import ConvergenceError, NumericalError, ValidationError, ZeroFrequencyError
from .lattice import mobius_transform, zeta_transform
from .logistic import SolverConfig, fit_lnm, solve_node, symmetrize
from .mobius import FrequencyVector, ThresholdRule, apply_threshold, empirical_frequencies, estimate_theta, fit_mobius
from .model import (
    GraphEstimate,
    ProbabilityVector,
    ThetaVector,
    conditional_odds_ratio,
    conditional_success,
    independence_query,
    pairwise_graph,
    probs_from_theta,
    theta_from_probs,
)
from .sampler import ModelSpec, random_pairwise_model, sample

__version__ = "0.1.0"
