"""Monte-Carlo coverage experiments.

Each replication draws true scores uniformly on ``[-M, M]`` (then centres
them), samples a comparison graph and outcomes, fits the MLE and records
plug-in standard deviations, confidence-interval coverage and the z-score of
one tracked coordinate.

Replication ``r`` is seeded from ``SeedSequence(seed, spawn_key=(r,))`` and
results are merged in replication order, so a summary depends only on the
config and never on the number of worker processes.
"""

from __future__ import annotations

import ast
import csv
import io
import json
import math
import operator
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import ndtri
from threadpoolctl import threadpool_limits

from .data import draw_latent_scores, sample_outcomes
from .errors import ConfigInvalid, EmptyInput
from .graph import SAMPLER_RULES, GraphSamplerConfig, sample_graph
from .inference import normal_quantile, plugin_variance
from .mle import FitOptions, fit
from .models import PairwiseModel, make_model

# --- small arithmetic expressions in n and p ------------------------------

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_FUNCS = {"log": math.log, "sqrt": math.sqrt, "exp": math.exp}


def eval_expr(expr: float | int | str, **names: float) -> float:
    """Evaluate a number or an arithmetic expression such as ``"p*log(n)"``.

    Only ``+ - * / **``, the functions ``log``, ``sqrt``, ``exp`` and the
    given names are allowed.
    """
    if isinstance(expr, (int, float)):
        return float(expr)

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Name) and node.id in names:
            return float(names[node.id])
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS and len(node.args) == 1:
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise ConfigInvalid(f"unsupported expression: {expr!r}")

    try:
        tree = ast.parse(str(expr).replace("^", "**"), mode="eval")
    except SyntaxError:
        raise ConfigInvalid(f"cannot parse expression {expr!r}") from None
    return float(ev(tree))


@dataclass
class ExperimentConfig:
    model: str
    n: int
    params: dict[str, float] = field(default_factory=dict)
    M: float | str = 1.0
    p: float | str = "n**-0.5"
    q: float | str = "p*log(n)"
    graph_rule: str = "directed-uniform"
    replications: int = 300
    alpha: float = 0.05
    seed: int = 0
    workers: int = 1
    fixed_u: bool = False
    track: int = 0

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigInvalid("replications must be >= 1")
        if not 0 < self.alpha < 1:
            raise ConfigInvalid("alpha must lie in (0, 1)")
        if self.n < 2:
            raise ConfigInvalid("n must be >= 2")
        if not 0 <= self.track < self.n:
            raise ConfigInvalid("tracked coordinate out of range")
        if self.graph_rule not in SAMPLER_RULES:
            raise ConfigInvalid(f"unknown graph rule {self.graph_rule!r}")
        if self.workers < 1:
            raise ConfigInvalid("workers must be >= 1")
        try:
            self.build_model()
        except Exception as exc:  # unknown model or bad parameters
            raise ConfigInvalid(str(exc)) from exc
        p, q, M = self.resolved()
        if not (0 <= p <= q <= 1):
            raise ConfigInvalid(f"need 0 <= p <= q <= 1, got p={p:g}, q={q:g}")
        if not M > 0:
            raise ConfigInvalid("M must be positive")

    def build_model(self) -> PairwiseModel:
        return make_model(self.model, **self.params)

    def resolved(self) -> tuple[float, float, float]:
        """Numeric ``(p, q, M)`` for this ``n``."""
        n = float(self.n)
        p = eval_expr(self.p, n=n)
        q = eval_expr(self.q, n=n, p=p)
        M = eval_expr(self.M, n=n)
        return p, q, M

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ConfigInvalid(f"unknown config keys {sorted(extra)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigInvalid(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            return ExperimentConfig.from_dict(json.load(fh))
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"invalid JSON: {exc}") from exc


@dataclass
class _Replication:
    rep: int
    ok: bool
    sd_sum: float = 0.0
    covered: int = 0
    count: int = 0
    z: float = math.nan


def _fixed_scores(config: ExperimentConfig, M: float):
    rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(2**32 - 1,)))
    return draw_latent_scores(config.n, M, rng)


def run_replication(config: ExperimentConfig, rep: int) -> _Replication:
    model = config.build_model()
    p, q, M = config.resolved()
    ss_u, ss_g, ss_x = np.random.SeedSequence(config.seed, spawn_key=(rep,)).spawn(3)
    u = _fixed_scores(config, M) if config.fixed_u else draw_latent_scores(config.n, M, np.random.default_rng(ss_u))
    graph = sample_graph(GraphSamplerConfig(config.n, p, q, config.graph_rule), np.random.default_rng(ss_g))
    data = sample_outcomes(model, u, graph, rng=np.random.default_rng(ss_x))
    res = fit(model, data, FitOptions())
    if not res.converged:
        return _Replication(rep, False)
    var = plugin_variance(model, data, res.u_hat)
    if np.any(var.isolated):
        return _Replication(rep, False)
    sd = var.sd
    half = normal_quantile(config.alpha) * sd
    covered = int(np.sum(np.abs(res.u_hat - u.u) <= half))
    k = config.track
    z = float((res.u_hat[k] - u.u[k]) / sd[k])
    return _Replication(rep, True, float(sd.sum()), covered, config.n, z)


@dataclass
class ExperimentSummary:
    config: ExperimentConfig
    mean_sd: float
    coverage: float
    z_scores: np.ndarray
    failed_replications: int
    z_replications: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @property
    def successful_replications(self) -> int:
        return len(self.z_scores)

    def row(self) -> dict:
        _, _, M = self.config.resolved()
        return {
            "model": self.config.model,
            "n": self.config.n,
            "M": M,
            "mean_sd": self.mean_sd,
            "coverage": self.coverage,
            "failed": self.failed_replications,
        }


def _init_worker():
    # one BLAS thread per worker process
    threadpool_limits(1)


def run_experiment(config: ExperimentConfig, workers: int | None = None) -> ExperimentSummary:
    """Run all replications of ``config`` and aggregate them in order."""
    workers = config.workers if workers is None else workers
    reps = range(config.replications)
    if workers <= 1:
        results = [run_replication(config, r) for r in reps]
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker) as pool:
            results = list(pool.map(run_replication, [config] * len(reps), reps))
    ok = [r for r in results if r.ok]
    total = sum(r.count for r in ok)
    mean_sd = sum(r.sd_sum for r in ok) / total if total else math.nan
    coverage = sum(r.covered for r in ok) / total if total else math.nan
    return ExperimentSummary(
        config=config,
        mean_sd=mean_sd,
        coverage=coverage,
        z_scores=np.array([r.z for r in ok]),
        failed_replications=len(results) - len(ok),
        z_replications=np.array([r.rep for r in ok], dtype=int),
    )


def qq_data(z_scores) -> list[tuple[float, float]]:
    """Pairs ``(normal quantile at (k - 0.5)/m, k-th smallest z)``."""
    z = np.sort(np.asarray(z_scores, dtype=float))
    m = z.size
    if m == 0:
        raise EmptyInput("no z-scores")
    theo = ndtri((np.arange(1, m + 1) - 0.5) / m)
    return [(float(a), float(b)) for a, b in zip(theo, z)]


SUMMARY_COLUMNS = ("model", "n", "M", "mean_sd", "coverage", "failed")


def summaries_to_csv(summaries: list[ExperimentSummary]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SUMMARY_COLUMNS, lineterminator="\n")
    w.writeheader()
    for s in summaries:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in s.row().items()})
    return buf.getvalue()


def z_scores_to_csv(summary: ExperimentSummary) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["replication", "z"])
    for k, z in zip(summary.z_replications, summary.z_scores):
        w.writerow([int(k), repr(float(z))])
    return buf.getvalue()
