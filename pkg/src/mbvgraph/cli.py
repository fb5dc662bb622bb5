"""Command-line entry point: ``mbvgraph <command> ...``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .bench import ExperimentConfig, confusion, relative_error, run_experiment
from .errors import NumericalError, ValidationError
from .io import (
    export_graph,
    read_graph,
    read_model,
    read_samples,
    write_graph_json,
    write_matrix_csv,
    write_model,
    write_samples,
)
from .logistic import fit_lnm, theta_from_lnm
from .mobius import ThresholdRule, choose_quantile, estimate_theta, empirical_frequencies, fit_mobius, apply_threshold, truncate_order
from .model import ThetaVector, pairwise_graph, theta_from_probs
from .sampler import ModelSpec, random_pairwise_model, sample

log = logging.getLogger("mbvgraph")


def _labels(text):
    return [s.strip() for s in text.split(",")] if text else None


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ValidationError(f"expected comma-separated numbers, got {text!r}") from exc


def _write_graph(g, path, labels=None):
    path = Path(path)
    if path.suffix == ".json":
        write_graph_json(g, path, labels)
    else:
        fmt = "edge-csv" if path.suffix == ".csv" else "dot"
        path.write_text(export_graph(g, fmt, labels))


def cmd_sample(args):
    model = read_model(args.model)
    write_samples(sample(model, args.n, args.seed), args.out)


def cmd_gen_model(args):
    spec = ModelSpec(args.p, args.edges, args.coupling, args.seed, args.random_singletons)
    write_model(random_pairwise_model(spec), args.out)


def cmd_fit_mobius(args):
    x = read_samples(args.data)
    if args.quantiles:
        th = estimate_theta(empirical_frequencies(x, args.alpha))
        if args.max_order is not None:
            th = truncate_order(th, args.max_order)
        q, path = choose_quantile(th, _floats(args.quantiles), args.prior_edges)
        log.info("quantile path %s; chose %g", path, q)
        th = apply_threshold(th, ThresholdRule("quantile", q, args.scope))
        graph = pairwise_graph(th, tol=0.0)
    else:
        rule = ThresholdRule("quantile", args.quantile, args.scope) if args.quantile else None
        th, graph = fit_mobius(x, rule, alpha=args.alpha, max_order=args.max_order)
    if args.out_model:
        write_model(th, args.out_model)
    if args.out_graph:
        _write_graph(graph, args.out_graph, _labels(args.labels))
    if not (args.out_model or args.out_graph):
        print(export_graph(graph, "edge-csv"), end="")


def cmd_fit_lnm(args):
    x = read_samples(args.data)
    grid = "auto" if args.grid == "auto" else _floats(args.grid)
    fit = fit_lnm(x, grid=grid, seed=args.seed, folds=args.folds, rule=args.rule, selection=args.selection)
    log.info("selected penalties %s", fit.lambdas.tolist())
    if args.out_graph:
        _write_graph(fit.graph, args.out_graph, _labels(args.labels))
    if args.out_raw:
        write_matrix_csv(fit.raw, args.out_raw)
    if args.out_model:
        write_model(theta_from_lnm(fit), args.out_model)
    if not (args.out_graph or args.out_raw or args.out_model):
        print(export_graph(fit.graph, "edge-csv"), end="")


def _as_theta(model):
    return model if isinstance(model, ThetaVector) else theta_from_probs(model)


def cmd_metrics(args):
    truth = _as_theta(read_model(args.true))
    est = _as_theta(read_model(args.est))
    counts = confusion(pairwise_graph(truth, tol=0.0), pairwise_graph(est, tol=0.0))
    out = {
        "tp": counts.tp,
        "tn": counts.tn,
        "fn": counts.fn,
        "fp": counts.fp,
        "accuracy": counts.accuracy,
        "err": relative_error(truth, est, args.scope),
        "scope": args.scope,
    }
    print(json.dumps(out, indent=2))


def cmd_bench(args):
    cfg = ExperimentConfig.from_json(Path(args.config).read_text())
    report = run_experiment(cfg, workers=args.workers)
    Path(args.out).write_text(report.summary_csv(runtime=not args.no_runtime))
    if args.raw:
        Path(args.raw).write_text(report.raw_csv(runtime=not args.no_runtime))
    failed = sum(row.failures for row in report.summary)
    if failed:
        log.warning("%d method runs failed; see the error column of the raw report", failed)


def cmd_export(args):
    text = export_graph(read_graph(args.graph), args.format, _labels(args.labels))
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text, end="")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mbvgraph", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw samples from a model file")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("gen-model", help="random pairwise model with mixed couplings")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--edges", type=int, required=True)
    p.add_argument("--coupling", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--random-singletons", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_model)

    p = sub.add_parser("fit-mobius", help="closed-form Moebius-inversion estimate")
    p.add_argument("--data", required=True)
    p.add_argument("--quantile", type=float, default=None)
    p.add_argument("--quantiles", default=None, help="candidate quantiles, chosen by --prior-edges")
    p.add_argument("--prior-edges", type=int, default=None)
    p.add_argument("--scope", choices=["pairwise", "all"], default="pairwise")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--max-order", type=int, default=None)
    p.add_argument("--out-model")
    p.add_argument("--out-graph")
    p.add_argument("--labels")
    p.set_defaults(func=cmd_fit_mobius)

    p = sub.add_parser("fit-lnm", help="l1-logistic neighbourhood selection")
    p.add_argument("--data", required=True)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--grid", default="auto")
    p.add_argument("--rule", choices=["min", "max"], default="min")
    p.add_argument("--selection", choices=["1se", "min"], default="1se")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-graph")
    p.add_argument("--out-raw")
    p.add_argument("--out-model")
    p.add_argument("--labels")
    p.set_defaults(func=cmd_fit_lnm)

    p = sub.add_parser("metrics", help="accuracy and relative error of an estimate")
    p.add_argument("--true", required=True)
    p.add_argument("--est", required=True)
    p.add_argument("--scope", choices=["all", "nonempty", "pairwise", "pairwise+singleton"], default="all")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("bench", help="run a simulation study from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--raw")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-runtime", action="store_true", help="omit wall-clock columns")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("export", help="render a graph or model file")
    p.add_argument("--graph", required=True)
    p.add_argument("--format", choices=["dot", "edge-csv"], default="dot")
    p.add_argument("--labels")
    p.add_argument("--out")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        args.func(args)
    except NumericalError as exc:
        log.error("%s", exc)
        return 3
    except (ValidationError, OSError) as exc:
        log.error("%s", exc)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
