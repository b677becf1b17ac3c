"""Command line interface.

Subcommands: ``simulate``, ``fit``, ``path``, ``cv``, ``evaluate`` and
``replicate``.  Every successful run writes ``manifest.json`` into its
output directory last; a failed run removes whatever it had written and
prints one JSON error line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .benchmark import METRIC_COLUMNS, replicate, worker_count
from .evaluation import (c_index, roc_auc, selection_metrics, selection_roc)
from .exceptions import AFTNetError
from .io import (fit_to_json, load_adjacency, load_dataset, load_result,
                 read_json, read_matrix, sha256_file, write_dataset,
                 write_edge_list, write_json)
from .network import PenaltyConfig, empty_prior
from .scale import estimate_sigma
from .selection import cv_pl, make_lambda_grid
from .solver import SolverOptions, fit_path, prox_grad_fit
from .synthetic import ScenarioConfig, simulate_scenario

TOPOLOGY_FLAGS = {"disjoint": "disjoint", "overlap": "overlap"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


class _Run:
    """Tracks outputs and inputs of one invocation."""

    def __init__(self, out_dir):
        self.out = Path(out_dir)
        self.created_dir = not self.out.exists()
        self.out.mkdir(parents=True, exist_ok=True)
        self.written = []
        self.inputs = {}

    def path(self, name):
        p = self.out / name
        self.written.append(p)
        return p

    def record_input(self, path):
        if path is not None:
            self.inputs[str(path)] = sha256_file(path)

    def rollback(self):
        for p in self.written:
            try:
                p.unlink()
            except FileNotFoundError:
                pass
        if self.created_dir:
            try:
                self.out.rmdir()
            except OSError:
                pass


def _add_solver_args(p):
    p.add_argument("--max-iter", type=int, default=2000)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--intercept", action="store_true",
                   help="fit an unpenalized intercept")


def _add_data_args(p):
    p.add_argument("--features", required=True)
    p.add_argument("--outcomes", required=True)
    p.add_argument("--network", default=None,
                   help="edge list; omitted means no network penalty")
    p.add_argument("--log-times", action="store_true",
                   help="the time column already holds log-times")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--sigma", type=float, default=None,
                   help="fixed scale; estimated from an intercept-only fit "
                        "when omitted")
    p.add_argument("--out", required=True)


def _add_grid_args(p):
    p.add_argument("--nlambda", type=int, default=50)
    p.add_argument("--lambda-min-ratio", type=float, default=0.01)


def build_parser():
    parser = _Parser(prog="aftnet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("simulate", help="generate a benchmark scenario")
    p.add_argument("--topology", choices=sorted(TOPOLOGY_FLAGS),
                   default="disjoint")
    p.add_argument("--effect", choices=("weak", "strong"), default="weak")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--censor-rate", type=float, default=0.30)
    p.add_argument("--v", type=int, default=5,
                   help="positively correlated genes per 10-gene module")
    p.add_argument("--out", required=True)

    p = sub.add_parser("fit", help="fit at one lambda")
    _add_data_args(p)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    _add_solver_args(p)

    p = sub.add_parser("path", help="fit a warm-started lambda path")
    _add_data_args(p)
    _add_grid_args(p)
    _add_solver_args(p)

    p = sub.add_parser("cv", help="select lambda by CV-PL and refit")
    _add_data_args(p)
    _add_grid_args(p)
    _add_solver_args(p)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--plain-folds", action="store_true",
                   help="shuffle folds without event stratification")

    p = sub.add_parser("evaluate", help="score a result against a truth")
    p.add_argument("--result", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--test-features", required=True)
    p.add_argument("--test-outcomes", default=None,
                   help="adds Harrell's C-index when given")
    p.add_argument("--log-times", action="store_true")
    p.add_argument("--out", required=True)

    p = sub.add_parser("replicate", help="replicated simulation study")
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--topology", choices=sorted(TOPOLOGY_FLAGS),
                   default="disjoint")
    p.add_argument("--effect", choices=("weak", "strong"), default="weak")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--folds", type=int, default=5)
    _add_grid_args(p)
    p.add_argument("--max-iter", type=int, default=2000)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--out", required=True)
    return parser


def _solver_opts(args):
    return SolverOptions(max_iter=args.max_iter, tol=args.tol,
                         standardize=getattr(args, "standardize", False),
                         fit_intercept=getattr(args, "intercept", False))


def _load_inputs(args, run):
    data = load_dataset(args.features, args.outcomes, args.log_times)
    run.record_input(args.features)
    run.record_input(args.outcomes)
    if args.network:
        prior = load_adjacency(args.network, data.feature_names)
        run.record_input(args.network)
    else:
        prior = empty_prior(data.p)
    if args.sigma is not None:
        sigma, scale = args.sigma, None
    else:
        scale = estimate_sigma(data)
        sigma = scale.sigma_hat
    return data, prior, sigma, scale


def _result_doc(data, sigma, scale, fit):
    doc = {"p": data.p, "n": data.n,
           "feature_names": list(data.feature_names or [])}
    if scale is not None:
        doc["scale_fit"] = asdict(scale)
    doc["sigma_hat"] = sigma
    doc.update(fit_to_json(fit))
    return doc


def cmd_simulate(args, run):
    cfg = ScenarioConfig.preset(args.effect, TOPOLOGY_FLAGS[args.topology],
                                args.sigma, args.seed,
                                censor_rate=args.censor_rate, v=args.v)
    train, test, prior, truth = simulate_scenario(cfg)
    write_dataset(train, run.path("train_features.csv"),
                  run.path("train_outcomes.csv"))
    write_dataset(test, run.path("test_features.csv"),
                  run.path("test_outcomes.csv"))
    write_edge_list(prior, run.path("network.csv"))
    write_json({
        "p": truth.p,
        "p_active": truth.p_active,
        "sigma_true": truth.sigma_true,
        "beta_star": [float(b) for b in truth.beta_star],
        "active_set": [int(j) for j in truth.active_set],
        "feature_names": list(train.feature_names),
        "config": asdict(cfg),
    }, run.path("truth.json"))
    return {"seeds": {"scenario": cfg.seed},
            "shapes": {"train": [train.n, train.p], "test": [test.n, test.p]}}


def cmd_fit(args, run):
    data, prior, sigma, scale = _load_inputs(args, run)
    fit = prox_grad_fit(data, prior, PenaltyConfig(args.lam, args.alpha),
                        sigma, opts=_solver_opts(args))
    write_json(_result_doc(data, sigma, scale, fit), run.path("result.json"))
    return {}


def _grid(args, data, sigma, opts):
    return make_lambda_grid(data, args.alpha, sigma, args.nlambda,
                            args.lambda_min_ratio, opts)


def cmd_path(args, run):
    data, prior, sigma, scale = _load_inputs(args, run)
    opts = _solver_opts(args)
    grid = _grid(args, data, sigma, opts)
    path = fit_path(data, prior, args.alpha, grid, sigma, opts)
    doc = _result_doc(data, sigma, scale, path.fits[-1])
    doc["path"] = [fit_to_json(f) for f in path.fits]
    write_json(doc, run.path("path.json"))
    return {}


def cmd_cv(args, run):
    data, prior, sigma, scale = _load_inputs(args, run)
    opts = _solver_opts(args)
    grid = _grid(args, data, sigma, opts)
    report = cv_pl(data, prior, args.alpha, grid, args.folds, sigma, opts,
                   args.seed, stratified=not args.plain_folds)
    path = fit_path(data, prior, args.alpha, grid, sigma, opts)
    best = path.fits[report.index_opt]
    doc = _result_doc(data, sigma, scale, best)
    doc["cv"] = {
        "lambda_opt": report.lambda_opt,
        "index_opt": report.index_opt,
        "lambdas": [float(v) for v in report.lambdas],
        "cv_curve": [float(v) for v in report.cv_curve],
        "fold_assignment": [int(k) for k in report.fold_assignment],
        "seed": report.seed,
        "folds": args.folds,
        "stratified": not args.plain_folds,
    }
    doc["path"] = [fit_to_json(f) for f in path.fits]
    write_json(doc, run.path("cv.json"))
    return {"seeds": {"folds": args.seed}}


def cmd_evaluate(args, run):
    beta, path_betas, doc = load_result(args.result)
    truth = read_json(args.truth)
    run.record_input(args.result)
    run.record_input(args.truth)
    beta_star = np.asarray(truth["beta_star"], dtype=float)
    _, X_test = read_matrix(args.test_features)
    run.record_input(args.test_features)
    metrics = selection_metrics(beta, beta_star, X_test).as_dict()
    if args.test_outcomes:
        test = load_dataset(args.test_features, args.test_outcomes,
                            args.log_times)
        run.record_input(args.test_outcomes)
        lp = X_test @ beta + doc.get("intercept", 0.0)
        metrics["c_index"] = c_index(-lp, test.log_times, test.events)
    points = selection_roc(path_betas or [beta], beta_star)
    metrics["roc_auc"] = roc_auc(points)
    write_json(metrics, run.path("metrics.json"))
    if doc.get("path"):
        lambdas = [None] + [f["lambda"] for f in doc["path"]] + [None]
    else:
        lambdas = [None, doc.get("lambda"), None]
    with open(run.path("roc.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda", "fpr", "tpr"])
        for lam, (fpr, tpr) in zip(lambdas, points):
            w.writerow(["" if lam is None else repr(lam), repr(float(fpr)),
                        repr(float(tpr))])
    return {}


def cmd_replicate(args, run):
    cfg = ScenarioConfig.preset(args.effect, TOPOLOGY_FLAGS[args.topology],
                                args.sigma, args.seed)
    opts = SolverOptions(max_iter=args.max_iter, tol=args.tol)
    rows, summary = replicate(cfg, args.reps, workers=worker_count(),
                              alpha=args.alpha, K=args.folds,
                              n_lambda=args.nlambda,
                              min_ratio=args.lambda_min_ratio, opts=opts)
    columns = ["replication", "seed", *METRIC_COLUMNS, "c_index", "roc_auc",
               "lambda_opt", "sigma_hat", "n_selected"]
    with open(run.path("replications.csv"), "w", newline="",
              encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([repr(row[c]) for c in columns])
    with open(run.path("summary.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        cols = [c for c in columns if c in summary]
        w.writerow(["statistic", *cols])
        w.writerow(["mean", *[repr(summary[c]) for c in cols]])
    return {"seeds": {"base": args.seed,
                      "replications": [row["seed"] for row in rows]}}


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "path": cmd_path,
    "cv": cmd_cv,
    "evaluate": cmd_evaluate,
    "replicate": cmd_replicate,
}


def _error_line(kind, exc):
    return json.dumps({"error": kind, "type": type(exc).__name__,
                       "message": str(exc)})


def run_cli(argv=None) -> int:
    """Entry point; returns the process exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(_error_line("usage", exc), file=sys.stderr)
        return 2
    t0 = time.perf_counter()
    try:
        run = _Run(args.out)
    except OSError as exc:
        print(_error_line("io", exc), file=sys.stderr)
        return 1
    try:
        extra = COMMANDS[args.command](args, run) or {}
    except (AFTNetError, ValueError, KeyError, OSError) as exc:
        run.rollback()
        print(_error_line(args.command, exc), file=sys.stderr)
        return 1
    manifest = {
        "subcommand": args.command,
        "options": {k: v for k, v in vars(args).items() if k != "command"},
        "input_digests": run.inputs,
        "outputs": [p.name for p in run.written],
        "software_version": __version__,
        "duration_seconds": time.perf_counter() - t0,
    }
    manifest.update(extra)
    write_json(manifest, run.out / "manifest.json")
    return 0


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
