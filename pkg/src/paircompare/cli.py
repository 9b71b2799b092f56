"""Command-line interface: ``paircompare <verb> [options]``.

Verbs: ``simulate``, ``fit``, ``infer``, ``validate``, ``graphgen``.
Exit status is 0 on success, 1 on a runtime failure and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import replace

import numpy as np

from . import __version__
from .data import load_csv
from .diagnostics import model_constants, validate_model
from .errors import PairwiseError, UnknownModel
from .graph import SAMPLER_RULES, GraphSamplerConfig, sample_graph
from .inference import (
    VarianceEstimate,
    benjamini_hochberg,
    inference_report,
    plugin_variance,
    z_test_difference,
)
from .mle import FitOptions, FitResult, fit
from .models import MODELS, PairwiseModel, make_model, parse_params
from .simulation import ExperimentConfig, load_config, run_experiment, summaries_to_csv, z_scores_to_csv


class UsageError(Exception):
    pass


def _g(x) -> str:
    return "nan" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.6g}"


def _write_atomic(path: str, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and a rename."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, path: str | None) -> None:
    if path:
        _write_atomic(path, text)
    else:
        sys.stdout.write(text)


def _model_from_args(args) -> PairwiseModel:
    try:
        params = parse_params(args.params)
        return make_model(args.model, **params)
    except UnknownModel as exc:
        raise UsageError(str(exc)) from None
    except PairwiseError as exc:
        raise UsageError(str(exc)) from None


def _parse_pair(text: str) -> tuple[int, int]:
    try:
        a, b = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected i,j with integer ids, got {text!r}") from None
    return a, b


# --- verbs -----------------------------------------------------------------


def cmd_fit(args) -> int:
    model = _model_from_args(args)
    data, labels = load_csv(args.data, model.support)
    res = fit(model, data, FitOptions(max_iter=args.max_iter))
    _emit(res.to_json() + "\n", args.out)
    print(f"status={res.status} iterations={res.iterations} loglik={_g(res.loglik)}", file=sys.stderr)
    return 0 if res.status != "max-iter" else 1


def cmd_infer(args) -> int:
    model = _model_from_args(args)
    with open(args.fit, encoding="utf-8") as fh:
        fit_json = json.load(fh)
    u_hat = np.asarray(fit_json["u_hat"], dtype=float)
    labels = None
    if "rho" in fit_json:
        variance = VarianceEstimate(np.asarray(fit_json["rho"], dtype=float), "provided")
    else:
        if not args.data:
            raise UsageError("--data is required unless the fit file carries 'rho'")
        data, labels = load_csv(args.data, model.support)
        if data.n != len(u_hat):
            raise PairwiseError(f"fit has {len(u_hat)} scores but data has {data.n} subjects")
        variance = plugin_variance(model, data, u_hat)
    if len(variance.rho) != len(u_hat):
        raise PairwiseError("rho and u_hat lengths differ")

    tests = [z_test_difference(i, j, u_hat, variance) for i, j in args.test]
    rejected = set(benjamini_hochberg([t.p_value for t in tests], args.alpha)) if args.bh and tests else set()
    if not args.bh:
        rejected = {k for k, t in enumerate(tests) if t.p_value <= args.alpha}
    report = {
        "alpha": args.alpha,
        "vertices": inference_report(u_hat, variance, args.alpha, labels),
        "tests": [{**t.to_dict(), "rejected": k in rejected} for k, t in enumerate(tests)],
        "correction": "benjamini-hochberg" if args.bh else "none",
    }
    _emit(json.dumps(report, indent=2) + "\n", args.out)
    for k, t in enumerate(tests):
        flag = "reject" if k in rejected else "keep"
        print(f"test {t.i},{t.j}: z={_g(t.statistic)} p={_g(t.p_value)} {flag}", file=sys.stderr)
    return 0


def cmd_validate(args) -> int:
    model = _model_from_args(args)
    step = args.grid_step
    k = int(math.ceil((args.M + 1) / step))
    grid = np.linspace(-(args.M + 1), args.M + 1, 2 * k + 1)
    report = validate_model(model, grid)
    out = {"validation": report.to_dict()}
    try:
        out["constants"] = model_constants(model, args.M, step).to_dict()
    except PairwiseError as exc:
        out["constants"] = {"error": str(exc)}
    _emit(json.dumps(out, indent=2) + "\n", args.out)
    for name, ax in report.axioms.items():
        print(f"{name}: {'pass' if ax.passed else 'FAIL'} residual={_g(ax.residual)}", file=sys.stderr)
    return 0 if report.passed else 1


def cmd_graphgen(args) -> int:
    cfg = GraphSamplerConfig(args.n, args.p, args.q, args.rule, args.seed)
    g = sample_graph(cfg)
    _emit(g.to_edge_list(), args.out)
    print(f"n={g.n} edges={g.num_edges} connected={g.is_connected()}", file=sys.stderr)
    return 0


def cmd_simulate(args) -> int:
    if args.config:
        cfg = load_config(args.config)
    elif args.model and args.n:
        cfg = ExperimentConfig(model=args.model, n=args.n, params=parse_params(args.params))
    else:
        raise UsageError("simulate needs --config or both --model and --n")
    overrides = {}
    for key in ("n", "M", "p", "q", "seed", "replications", "alpha"):
        val = getattr(args, key)
        if val is not None:
            overrides[key] = val
    if args.model and args.config:
        overrides["model"] = args.model
    if args.params and args.config:
        overrides["params"] = parse_params(args.params)
    if args.threads is not None:
        overrides["workers"] = args.threads
    if args.rule is not None:
        overrides["graph_rule"] = args.rule
    cfg = replace(cfg, **overrides)
    summary = run_experiment(cfg)
    _emit(summaries_to_csv([summary]), args.out)
    if args.zscores:
        _write_atomic(args.zscores, z_scores_to_csv(summary))
    print(
        f"{cfg.model} n={cfg.n}: mean_sd={_g(summary.mean_sd)} coverage={_g(summary.coverage)} "
        f"failed={summary.failed_replications}",
        file=sys.stderr,
    )
    return 0


# --- parser ----------------------------------------------------------------


def _number_or_expr(text: str):
    try:
        return float(text)
    except ValueError:
        return text


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="paircompare", description="Inference for pairwise comparison models.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="verb", metavar="VERB", required=True)

    def model_opts(p, required=True):
        p.add_argument("--model", required=required, help=f"model id: {', '.join(MODELS)}")
        p.add_argument("--params", help="model parameters, e.g. theta=2.32")

    p = sub.add_parser("fit", help="fit latent scores to a CSV of comparisons")
    model_opts(p)
    p.add_argument("--data", required=True, help="CSV with rows label_i,label_j,outcome")
    p.add_argument("--out", help="output JSON path (default: stdout)")
    p.add_argument("--max-iter", type=int, default=200)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("infer", help="confidence intervals and z-tests from a fit")
    model_opts(p)
    p.add_argument("--fit", required=True, help="fit JSON written by 'fit'")
    p.add_argument("--data", help="the CSV the fit came from (for plug-in variances)")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--test", type=_parse_pair, action="append", default=[], metavar="I,J",
                   help="test u_I = u_J (0-based ids, repeatable)")
    p.add_argument("--bh", action="store_true", help="Benjamini-Hochberg correction over the tests")
    p.add_argument("--out", help="output JSON path (default: stdout)")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("validate", help="check validity axioms and regularity constants")
    model_opts(p)
    p.add_argument("--M", type=float, default=1.0, help="dynamic range")
    p.add_argument("--grid-step", type=float, default=0.01)
    p.add_argument("--out", help="output JSON path (default: stdout)")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("graphgen", help="sample a G(n, p, q) comparison graph")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--rule", choices=SAMPLER_RULES, default="uniform")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output edge-list path (default: stdout)")
    p.set_defaults(func=cmd_graphgen)

    p = sub.add_parser("simulate", help="Monte-Carlo coverage experiment")
    p.add_argument("--config", help="experiment JSON")
    model_opts(p, required=False)
    p.add_argument("--n", type=int)
    p.add_argument("--M", type=_number_or_expr, help="dynamic range, number or expression in n")
    p.add_argument("--p", type=_number_or_expr, help="lower edge probability (expression in n)")
    p.add_argument("--q", type=_number_or_expr, help="upper edge probability (expression in n, p)")
    p.add_argument("--rule", choices=SAMPLER_RULES)
    p.add_argument("--replications", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, help="worker processes")
    p.add_argument("--out", help="summary CSV path (default: stdout)")
    p.add_argument("--zscores", help="z-score CSV path")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog} {args.verb}: error: {exc}", file=sys.stderr)
        return 2
    except (PairwiseError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"{parser.prog} {args.verb}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
