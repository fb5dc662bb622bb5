"""Edge-recovery metrics and the replicated simulation protocol.

Each replicate draws one random pairwise model (shared by every sample
size), draws one sample per size, and runs every configured method on the
same sample.  Metrics are edge accuracy over all unordered pairs and the
relative l2 error of the parameter vector under several scopes.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .errors import NumericalError, ValidationError
from .lattice import popcounts
from .logistic import fit_lnm, theta_from_lnm
from .mobius import DEFAULT_QUANTILES, ThresholdRule, apply_threshold, choose_quantile, estimate_theta, empirical_frequencies, truncate_order
from .model import GraphEstimate, ThetaVector, pairwise_graph
from .sampler import ModelSpec, make_rng, random_pairwise_model, sample

log = logging.getLogger(__name__)

METHODS = ("M-I", "L-N-M")
ERROR_SCOPES = ("all", "nonempty", "pairwise", "pairwise+singleton")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fn: int
    fp: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fn + self.fp

    @property
    def accuracy(self) -> float:
        """``(tp + tn) / total``, written so it equals ``1 - errors / total`` exactly."""
        return 1.0 - (self.fp + self.fn) / self.total


def confusion(true_graph: GraphEstimate, est_graph: GraphEstimate) -> ConfusionCounts:
    """Classify every unordered pair by presence in the true and estimated graphs."""
    if true_graph.p != est_graph.p:
        raise ValidationError(f"graphs have different node counts ({true_graph.p} vs {est_graph.p})")
    truth, est = true_graph.edges, est_graph.edges
    pairs = true_graph.p * (true_graph.p - 1) // 2
    tp = len(truth & est)
    fn = len(truth - est)
    fp = len(est - truth)
    return ConfusionCounts(tp=tp, tn=pairs - tp - fn - fp, fn=fn, fp=fp)


def scope_selector(p: int, scope: str) -> np.ndarray:
    """Entries compared by :func:`relative_error`.

    ``all`` is the whole vector including the empty-set (normalizing) entry,
    ``nonempty`` drops it, ``pairwise`` keeps second-order entries only and
    ``pairwise+singleton`` keeps orders one and two.
    """
    sizes = popcounts(p)
    selectors = {
        "all": np.ones(sizes.size, dtype=bool),
        "nonempty": sizes >= 1,
        "pairwise": sizes == 2,
        "pairwise+singleton": (sizes == 1) | (sizes == 2),
    }
    if scope not in selectors:
        raise ValidationError(f"unknown error scope {scope!r}")
    return selectors[scope]


def relative_error(true_theta: ThetaVector, est_theta: ThetaVector, scope: str = "nonempty") -> float:
    """``||theta - theta_hat|| / ||theta||`` over the entries in ``scope``."""
    if true_theta.p != est_theta.p:
        raise ValidationError("theta vectors have different node counts")
    sel = scope_selector(true_theta.p, scope)
    norm = np.linalg.norm(true_theta.values[sel])
    if norm == 0:
        raise NumericalError(f"true theta is zero on scope {scope!r}; relative error undefined")
    return float(np.linalg.norm(true_theta.values[sel] - est_theta.values[sel]) / norm)


@dataclass
class ExperimentConfig:
    """One simulation study; serialized as JSON with the same field names."""

    p: int = 5
    nonzero_pairs: int = 6
    coupling: float = 0.5
    sample_sizes: list[int] = field(default_factory=lambda: [150, 300, 500, 1000, 5000])
    replicates: int = 10
    methods: list[str] = field(default_factory=lambda: list(METHODS))
    quantiles: list[float] = field(default_factory=lambda: list(DEFAULT_QUANTILES))
    lambda_grid: str | list[float] = "auto"
    folds: int = 10
    master_seed: int = 0
    alpha: float = 0.5
    max_order: int | None = 2
    random_singletons: bool = False
    symmetrization: str = "min"
    cv_selection: str = "1se"

    def __post_init__(self):
        if self.replicates < 1:
            raise ValidationError("replicates must be at least 1")
        if not self.sample_sizes or any(n <= self.p for n in self.sample_sizes):
            raise ValidationError("every sample size must exceed p")
        unknown = set(self.methods) - set(METHODS)
        if unknown or not self.methods:
            raise ValidationError(f"methods must be drawn from {METHODS}, got {self.methods}")
        if isinstance(self.lambda_grid, str) and self.lambda_grid != "auto":
            raise ValidationError("lambda_grid must be 'auto' or a list of values")
        ModelSpec(self.p, self.nonzero_pairs, self.coupling)

    @classmethod
    def from_json(cls, text: str) -> ExperimentConfig:
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ValidationError("config must be a JSON object")
        unknown = set(raw) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValidationError(f"unknown config fields {sorted(unknown)}")
        return cls(**raw)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


@dataclass
class ReplicateRow:
    method: str
    n: int
    replicate: int
    accuracy: float = math.nan
    err: float = math.nan
    err_nonempty: float = math.nan
    err_pairwise: float = math.nan
    err_pairwise_singleton: float = math.nan
    tp: int = -1
    tn: int = -1
    fn: int = -1
    fp: int = -1
    setting: str = ""
    error: str = ""
    runtime: float = math.nan

    @property
    def failed(self) -> bool:
        return bool(self.error)


@dataclass
class SummaryRow:
    method: str
    n: int
    replicates: int
    failures: int
    accuracy_mean: float
    accuracy_std: float
    err_mean: float
    err_std: float
    err_nonempty_mean: float
    err_nonempty_std: float
    err_pairwise_mean: float
    err_pairwise_std: float
    err_pairwise_singleton_mean: float
    err_pairwise_singleton_std: float
    runtime_mean: float
    runtime_std: float


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    rows: list[ReplicateRow]
    summary: list[SummaryRow]

    def cell(self, method: str, n: int) -> SummaryRow:
        for row in self.summary:
            if row.method == method and row.n == n:
                return row
        raise KeyError((method, n))

    def summary_csv(self, runtime: bool = True) -> str:
        return _to_csv([asdict(r) for r in self.summary], runtime)

    def raw_csv(self, runtime: bool = True) -> str:
        return _to_csv([asdict(r) for r in self.rows], runtime)


def _fmt(value) -> str:
    if isinstance(value, float):
        return "nan" if math.isnan(value) else f"{value:.10g}"
    return str(value)


def _to_csv(records: list[dict], runtime: bool) -> str:
    if not records:
        return ""
    fields = [k for k in records[0] if runtime or not k.startswith("runtime")]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for rec in records:
        writer.writerow([_fmt(rec[k]) for k in fields])
    return buf.getvalue()


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray([v for v in values if not math.isnan(v)], dtype=float)
    if arr.size == 0:
        return math.nan, math.nan
    return float(arr.mean()), float(arr.std(ddof=1)) if arr.size > 1 else 0.0


def _fit_mi(x: np.ndarray, cfg: ExperimentConfig) -> tuple[ThetaVector, str]:
    th = estimate_theta(empirical_frequencies(x, cfg.alpha))
    if cfg.max_order is not None:
        th = truncate_order(th, cfg.max_order)
    if not cfg.quantiles:
        return th, "q=none"
    q, path = choose_quantile(th, cfg.quantiles, prior_edges=cfg.nonzero_pairs)
    trail = ";".join(f"{qq:g}:{k}" for qq, k in path)
    return apply_threshold(th, ThresholdRule("quantile", q, "pairwise")), f"q={q:g} path={trail}"


def _fit_lnm(x: np.ndarray, cfg: ExperimentConfig, seed: np.random.Generator) -> tuple[ThetaVector, str]:
    fit = fit_lnm(
        x, grid=cfg.lambda_grid, seed=seed, folds=cfg.folds, rule=cfg.symmetrization, selection=cfg.cv_selection
    )
    return theta_from_lnm(fit), "lambda=" + ";".join(f"{lam:.4g}" for lam in fit.lambdas)


def _score(row: ReplicateRow, truth: ThetaVector, est: ThetaVector) -> None:
    counts = confusion(pairwise_graph(truth, tol=0.0), pairwise_graph(est, tol=0.0))
    row.tp, row.tn, row.fn, row.fp = counts.tp, counts.tn, counts.fn, counts.fp
    row.accuracy = counts.accuracy
    row.err = relative_error(truth, est, "all")
    row.err_nonempty = relative_error(truth, est, "nonempty")
    row.err_pairwise = relative_error(truth, est, "pairwise")
    row.err_pairwise_singleton = relative_error(truth, est, "pairwise+singleton")


def run_replicate(cfg: ExperimentConfig, r: int) -> list[ReplicateRow]:
    """All methods and sample sizes for replicate ``r``.

    Streams: ``(seed, r, 0)`` draws the model, ``(seed, r, 1, n)`` the sample
    of size ``n`` and ``(seed, r, 2, n)`` the cross-validation splits.
    """
    spec = ModelSpec(cfg.p, cfg.nonzero_pairs, cfg.coupling, random_singletons=cfg.random_singletons)
    truth = random_pairwise_model(spec, make_rng(cfg.master_seed, r, 0))
    rows = []
    for n in cfg.sample_sizes:
        x = sample(truth, n, make_rng(cfg.master_seed, r, 1, n))
        for method in cfg.methods:
            row = ReplicateRow(method=method, n=n, replicate=r)
            start = time.perf_counter()
            try:
                if method == "M-I":
                    est, row.setting = _fit_mi(x, cfg)
                else:
                    est, row.setting = _fit_lnm(x, cfg, make_rng(cfg.master_seed, r, 2, n))
                row.runtime = time.perf_counter() - start
                _score(row, truth, est)
            except (NumericalError, ValidationError) as exc:
                row.runtime = time.perf_counter() - start
                row.error = f"{type(exc).__name__}: {exc}"
                log.warning("replicate %d, %s, n=%d failed: %s", r, method, n, exc)
            rows.append(row)
    return rows


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """Run every replicate and aggregate mean / sample std per (method, n).

    With ``workers > 1`` replicates run in a process pool; results do not
    depend on the worker count.
    """
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(workers) as pool:
            chunks = list(pool.map(run_replicate, [cfg] * cfg.replicates, range(cfg.replicates)))
    else:
        chunks = [run_replicate(cfg, r) for r in range(cfg.replicates)]
    rows = sorted(
        (row for chunk in chunks for row in chunk),
        key=lambda row: (cfg.methods.index(row.method), cfg.sample_sizes.index(row.n), row.replicate),
    )
    summary = []
    for method in cfg.methods:
        for n in cfg.sample_sizes:
            cell = [row for row in rows if row.method == method and row.n == n]
            ok = [row for row in cell if not row.failed]
            stats = {}
            for name in ("accuracy", "err", "err_nonempty", "err_pairwise", "err_pairwise_singleton", "runtime"):
                stats[name + "_mean"], stats[name + "_std"] = _mean_std([getattr(row, name) for row in ok])
            summary.append(SummaryRow(method, n, len(cell), len(cell) - len(ok), **stats))
    return ExperimentReport(cfg, rows, summary)
