import functools

import numpy as np
import pytest
from scipy import integrate

from paircompare.data import Dataset, sample_outcomes
from paircompare.graph import GraphSamplerConfig, sample_graph
from paircompare.mle import gradient, log_likelihood
from paircompare.simulation import ExperimentConfig, run_experiment
from paircompare.models import make_model

MODEL_SPECS = [
    ("bt", {}),
    ("thurstone", {}),
    ("rao-kupper", {"theta": 2.0}),
    ("davidson", {"theta": 1.0}),
    ("clm4", {"theta": 2.32}),
    ("cardinal", {"sigma": 2.0}),
]
MODEL_IDS = [name for name, _ in MODEL_SPECS]


@pytest.fixture(params=MODEL_SPECS, ids=MODEL_IDS)
def model(request):
    name, params = request.param
    return make_model(name, **params)


def all_models():
    return [make_model(name, **params) for name, params in MODEL_SPECS]


def central_diff(fun, y, h=1e-5):
    """Five-point central difference of a scalar function."""
    return (-fun(y + 2 * h) + 8 * fun(y + h) - 8 * fun(y - h) + fun(y - 2 * h)) / (12 * h)


def fisher_oracle(model, y):
    """Sum/integral of (d f / dy)^2 / f with the derivative by finite differences."""
    def term(x):
        df = central_diff(lambda t: model.pdf(x, t), y)
        return df * df / model.pdf(x, y)

    if model.support.is_finite:
        return sum(term(x) for x in model.support.values)
    s = model.params["sigma"]
    val, _ = integrate.quad(term, y - 12 * s, y + 12 * s, epsabs=1e-13, epsrel=1e-12, limit=200)
    return val


def fd_gradient(model, data, u, h=1e-5):
    out = np.empty_like(u)
    for k in range(len(u)):
        e = np.zeros_like(u)
        e[k] = h
        f = lambda t: log_likelihood(model, data, u + t * e)  # noqa: E731
        out[k] = (-f(2) + 8 * f(1) - 8 * f(-1) + f(-2)) / (12 * h)
    return out


def fd_hessian(model, data, u, h=1e-5):
    cols = []
    for k in range(len(u)):
        e = np.zeros_like(u)
        e[k] = h
        g = lambda t: gradient(model, data, u + t * e)  # noqa: E731
        cols.append((-g(2) + 8 * g(1) - 8 * g(-1) + g(-2)) / (12 * h))
    return np.column_stack(cols)


def grid_argmax(loglik, dim, lo=-2.0, hi=2.0):
    """Zooming grid search over the free coordinates of a sum-zero vector;
    the last level has step 1e-3."""
    center = np.full(dim, (lo + hi) / 2)
    for step, half in [(0.05, (hi - lo) / 2), (0.005, 0.1), (1e-3, 0.01)]:
        offs = np.arange(-half, half + step / 2, step)
        mesh = np.meshgrid(*[c + offs for c in center], indexing="ij")
        free = np.stack([m.ravel() for m in mesh], axis=1)
        vals = [loglik(np.append(v, -v.sum())) for v in free]
        center = free[int(np.argmax(vals))]
    return np.append(center, -center.sum())


def random_instance(model, n=10, seed=0, p=0.6):
    """Random dataset plus a random evaluation point."""
    rng = np.random.default_rng(seed)
    graph = sample_graph(GraphSamplerConfig(n, p, p, "constant-p"), rng)
    u_true = rng.uniform(-1, 1, n)
    data = sample_outcomes(model, u_true - u_true.mean(), graph, rng=rng)
    u_eval = rng.uniform(-1.5, 1.5, n)
    return data, u_eval


def dataset(model, n, triples):
    i, j, x = zip(*triples)
    return Dataset.from_units(n, i, j, x, model.support)


@functools.lru_cache(maxsize=None)
def _experiment(model, params, n, M, replications, seed):
    cfg = ExperimentConfig(model=model, n=n, params=dict(params), M=M, replications=replications, seed=seed)
    return run_experiment(cfg)


def cached_experiment(model, n, M=1.0, replications=300, seed=0, **params):
    """Run (or reuse within this session) one simulation cell."""
    return _experiment(model, tuple(sorted(params.items())), n, M, replications, seed)


ACCEPTANCE_LINES: dict[int, str] = {}


def record_acceptance(number, title, passed, detail):
    line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
