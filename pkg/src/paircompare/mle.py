"""Maximum-likelihood estimation of latent scores.

The log-likelihood ``l(u) = sum log f(X_ij; u_i - u_j)`` is concave, and its
Hessian is the negative of a weighted graph Laplacian with edge weights
``-dg/dy(X_ij; u_i - u_j)``.  :func:`fit` runs damped Newton ascent on the
sum-zero subspace, solving one grounded Laplacian system per iteration.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from .data import Dataset
from .errors import DimensionMismatch
from .models import PairwiseModel, make_model

CONVERGED = "converged"
NONEXISTENT = "nonexistent"
MAX_ITER = "max-iter"

# Dense Cholesky below this size, sparse LU up to CG_MIN, CG above.
DENSE_MAX = 2500
CG_MIN = 5000


@dataclass
class FitOptions:
    grad_tol: float = 1e-10
    max_iter: int = 200
    divergence_bound: float = 50.0
    shrink: float = 0.5
    armijo: float = 1e-4
    init: np.ndarray | None = None

    def __post_init__(self):
        if not (self.grad_tol > 0 and self.divergence_bound > 0 and self.max_iter > 0):
            raise ValueError("tolerances, max_iter and divergence_bound must be positive")
        if not (0 < self.shrink < 1 and 0 < self.armijo < 1):
            raise ValueError("line-search parameters must lie in (0, 1)")


@dataclass
class FitResult:
    u_hat: np.ndarray
    loglik: float
    iterations: int
    grad_norm: float
    status: str
    message: str = field(default="", compare=False)

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    def to_dict(self) -> dict:
        return {
            "u_hat": [float(v) for v in self.u_hat],
            "loglik": float(self.loglik),
            "iterations": int(self.iterations),
            "status": self.status,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> FitResult:
        return cls(
            u_hat=np.asarray(d["u_hat"], dtype=float),
            loglik=float(d.get("loglik", math.nan)),
            iterations=int(d.get("iterations", 0)),
            grad_norm=float(d.get("grad_norm", math.nan)),
            status=d.get("status", CONVERGED),
        )


def _check_u(dataset: Dataset, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (dataset.n,):
        raise DimensionMismatch(f"u has shape {u.shape}, expected ({dataset.n},)")
    return u


def _unit_derivs(model, dataset, u, order):
    y = u[dataset.i] - u[dataset.j]
    return model._derivs(dataset.x, y, order)


def log_likelihood(model: PairwiseModel, dataset: Dataset, u) -> float:
    u = _check_u(dataset, u)
    return float(np.sum(_unit_derivs(model, dataset, u, 0)[0]))


def _grad_from_scores(dataset, g):
    n = dataset.n
    return np.bincount(dataset.i, g, minlength=n) - np.bincount(dataset.j, g, minlength=n)


def gradient(model: PairwiseModel, dataset: Dataset, u) -> np.ndarray:
    """``d l / d u_i = sum_j g(X_ij; u_i - u_j)``."""
    u = _check_u(dataset, u)
    g = _unit_derivs(model, dataset, u, 1)[1]
    return _grad_from_scores(dataset, g)


def _laplacian(dataset, w) -> sp.csr_matrix:
    n = dataset.n
    i, j = dataset.i, dataset.j
    W = sp.coo_matrix((np.concatenate([w, w]), (np.concatenate([i, j]), np.concatenate([j, i]))), shape=(n, n))
    W = W.tocsr()
    deg = np.asarray(W.sum(axis=1)).ravel()
    return (sp.diags(deg) - W).tocsr()


def hessian(model: PairwiseModel, dataset: Dataset, u, sparse: bool = False):
    """Hessian of the log-likelihood: a negated weighted graph Laplacian."""
    u = _check_u(dataset, u)
    w = -_unit_derivs(model, dataset, u, 2)[2]
    H = -_laplacian(dataset, w)
    return H if sparse else H.toarray()


def _solve_laplacian(L: sp.csr_matrix, rhs: np.ndarray) -> np.ndarray:
    """Minimum-norm solution of ``L d = rhs`` for a connected-graph Laplacian
    and ``rhs`` summing to zero (last vertex grounded, then re-centred)."""
    n = L.shape[0]
    if n == 1:
        return np.zeros(1)
    d = np.zeros(n)
    if n <= DENSE_MAX:
        Lr = L[:-1, :-1].toarray()
        d[:-1] = sla.cho_solve(sla.cho_factor(Lr, lower=True, check_finite=False), rhs[:-1], check_finite=False)
    elif n <= CG_MIN:
        d[:-1] = spla.splu(L[:-1, :-1].tocsc()).solve(rhs[:-1])
    else:
        # regularize the null direction instead of grounding
        x, info = spla.cg(L + sp.identity(n) / n, rhs, rtol=1e-12, maxiter=10 * n)
        d = x
    return d - d.mean()


def mle_exists(model: PairwiseModel, dataset: Dataset) -> bool:
    """Whether the constrained maximizer exists (and is then unique).

    A unit ``(i, j, x)`` penalises ``u_i - u_j -> +inf`` when
    ``f(x; y) -> 0`` as ``y -> +inf``, and ``u_i - u_j -> -inf`` when that
    holds for ``-x``.  The likelihood has a finite maximizer exactly when the
    directed graph of these penalties is strongly connected.
    """
    g = dataset.graph
    if not g.is_connected():
        return False
    vanish = model.vanishing_at_plus_infinity()
    if vanish is None:
        return True
    vanish_arr = np.array(sorted(vanish))
    up = np.isin(dataset.x, vanish_arr)  # blocks u_i >> u_j: arc i -> j
    down = np.isin(-dataset.x, vanish_arr)  # blocks u_j >> u_i: arc j -> i
    src = np.concatenate([dataset.i[up], dataset.j[down]])
    dst = np.concatenate([dataset.j[up], dataset.i[down]])
    n = dataset.n
    if n == 1:
        return True
    A = sp.coo_matrix((np.ones(len(src)), (src, dst)), shape=(n, n)).tocsr()
    ncomp, _ = connected_components(A, directed=True, connection="strong")
    return ncomp == 1


def fit(model: PairwiseModel, dataset: Dataset, options: FitOptions | None = None) -> FitResult:
    """Maximize the log-likelihood subject to ``sum(u) = 0``."""
    opts = options or FitOptions()
    n = dataset.n
    if dataset.num_comparisons == 0:
        raise ValueError("dataset has no comparisons")

    u = np.zeros(n) if opts.init is None else _check_u(dataset, opts.init).copy()
    u -= u.mean()
    if not mle_exists(model, dataset):
        reason = "graph is disconnected" if not dataset.graph.is_connected() else "outcomes separate the subjects"
        ll = log_likelihood(model, dataset, u)
        return FitResult(u, ll, 0, math.nan, NONEXISTENT, reason)

    logf, g_unit, d1 = _unit_derivs(model, dataset, u, 2)
    ll = float(np.sum(logf))
    for it in range(opts.max_iter + 1):
        grad = _grad_from_scores(dataset, g_unit)
        gnorm = float(np.max(np.abs(grad)))
        if gnorm <= opts.grad_tol:
            return FitResult(u, ll, it, gnorm, CONVERGED)
        if it == opts.max_iter:
            break

        L = _laplacian(dataset, -d1)
        step = _solve_laplacian(L, grad - grad.mean())
        slope = float(grad @ step)
        if not (np.all(np.isfinite(step)) and slope > 0):
            step = grad - grad.mean()
            slope = float(grad @ step)

        t = 1.0
        accepted = False
        # below round-off level the Armijo test is noise; take the full step
        tiny = slope <= 1e-9 * max(1.0, abs(ll))
        while t > 1e-12:
            cand = u + t * step
            cand -= cand.mean()
            c_logf, c_g, c_d1 = _unit_derivs(model, dataset, cand, 2)
            c_ll = float(np.sum(c_logf))
            if tiny or c_ll >= ll + opts.armijo * t * slope:
                accepted = True
                break
            t *= opts.shrink
        if not accepted:
            return FitResult(u, ll, it, gnorm, MAX_ITER, "line search failed")
        u, ll, g_unit, d1 = cand, c_ll, c_g, c_d1
        if float(np.max(np.abs(u))) > opts.divergence_bound:
            return FitResult(u, ll, it + 1, gnorm, NONEXISTENT, "iterates diverged")
    return FitResult(u, ll, opts.max_iter, gnorm, MAX_ITER)


def profile_loglik(family: str, dataset: Dataset, theta_grid, options: FitOptions | None = None) -> list[tuple[float, FitResult]]:
    """Fit the scores at every threshold in ``theta_grid``."""
    grid = [float(t) for t in theta_grid]
    if not grid:
        raise ValueError("theta_grid is empty")
    return [(th, fit(make_model(family, theta=th), dataset, options)) for th in grid]


def profile_fit_threshold(family: str, dataset: Dataset, theta_grid, options: FitOptions | None = None) -> tuple[float, FitResult]:
    """Profile-likelihood estimate of the threshold parameter over a grid.

    Grid points whose fit does not converge are skipped; if none converges
    the last result is returned with ``theta = nan``.
    """
    results = profile_loglik(family, dataset, theta_grid, options)
    ok = [(th, r) for th, r in results if r.converged]
    if not ok:
        return math.nan, results[-1][1]
    return max(ok, key=lambda tr: tr[1].loglik)
