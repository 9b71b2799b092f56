"""Asymptotic variances, confidence intervals and tests on latent scores."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .data import Dataset
from .errors import DimensionMismatch, InvalidAlpha, IsolatedVertex, ZeroDegree
from .graph import ComparisonGraph
from .models import PairwiseModel


@dataclass
class VarianceEstimate:
    """Per-vertex asymptotic variance; isolated vertices carry ``inf``."""

    rho: np.ndarray
    source: str

    @property
    def isolated(self) -> np.ndarray:
        return ~np.isfinite(self.rho)

    @property
    def sd(self) -> np.ndarray:
        return np.sqrt(self.rho)

    def __len__(self) -> int:
        return len(self.rho)


def _variance(model: PairwiseModel, graph: ComparisonGraph, u: np.ndarray, source: str) -> VarianceEstimate:
    u = np.asarray(getattr(u, "u", u), dtype=float)
    if u.shape != (graph.n,):
        raise DimensionMismatch(f"score vector has length {u.size}, graph has {graph.n} vertices")
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    w = graph.multiplicity * np.asarray(model.pair_fisher_info(u[i] - u[j]), dtype=float)
    info = np.bincount(i, w, minlength=graph.n) + np.bincount(j, w, minlength=graph.n)
    with np.errstate(divide="ignore"):
        rho = np.where(info > 0, 1.0 / info, np.inf)
    return VarianceEstimate(rho, source)


def asymptotic_variance(model: PairwiseModel, graph: ComparisonGraph, u) -> VarianceEstimate:
    """``rho_i = 1 / sum_j m_ij I(u_i - u_j)`` over the neighbours of ``i``."""
    return _variance(model, graph, u, "truth")


def plugin_variance(model: PairwiseModel, dataset: Dataset, u_hat) -> VarianceEstimate:
    """The asymptotic variance evaluated at the fitted scores."""
    return _variance(model, dataset.graph, u_hat, "plug-in")


def _check_alpha(alpha: float) -> float:
    if not 0.0 < alpha < 1.0:
        raise InvalidAlpha(f"alpha must lie in (0, 1), got {alpha}")
    return float(alpha)


def normal_quantile(alpha: float) -> float:
    """``z_{alpha/2}``, the upper ``alpha/2`` standard-normal quantile."""
    return float(ndtri(1.0 - _check_alpha(alpha) / 2.0))


def confidence_interval(u_hat_i, rho_i, alpha: float = 0.05):
    """Two-sided ``1 - alpha`` interval ``u_hat_i +/- z_{alpha/2} sqrt(rho_i)``.

    Works elementwise on arrays.
    """
    z = normal_quantile(alpha)
    rho = np.asarray(rho_i, dtype=float)
    if np.any(~((rho > 0) & np.isfinite(rho))):
        raise IsolatedVertex("variance must be positive and finite")
    half = z * np.sqrt(rho)
    lo, hi = np.asarray(u_hat_i) - half, np.asarray(u_hat_i) + half
    if lo.ndim == 0:
        return float(lo), float(hi)
    return lo, hi


@dataclass(frozen=True)
class TestResult:
    i: int
    j: int
    statistic: float
    p_value: float
    alternative: str = "two-sided"

    __test__ = False  # not a pytest class

    def to_dict(self) -> dict:
        return {"i": self.i, "j": self.j, "z": self.statistic, "p": self.p_value}


def two_sided_p(z: float) -> float:
    return float(2.0 * ndtr(-abs(z)))


def z_test_difference(i: int, j: int, u_hat, rho) -> TestResult:
    """Test ``u_i = u_j`` with ``z = (u_i - u_j) / sqrt(rho_i + rho_j)``."""
    if i == j:
        raise ValueError("need two distinct subjects")
    u_hat = np.asarray(getattr(u_hat, "u", u_hat), dtype=float)
    r = np.asarray(getattr(rho, "rho", rho), dtype=float)
    if not (np.isfinite(r[i]) and np.isfinite(r[j])):
        raise IsolatedVertex(f"vertex {i if not np.isfinite(r[i]) else j} has no comparisons")
    z = float((u_hat[i] - u_hat[j]) / math.sqrt(r[i] + r[j]))
    return TestResult(int(i), int(j), z, two_sided_p(z))


def benjamini_hochberg(p_values, alpha: float = 0.05) -> list[int]:
    """Indices of hypotheses rejected by the Benjamini-Hochberg step-up rule."""
    alpha = _check_alpha(alpha)
    p = np.asarray(p_values, dtype=float)
    if p.size == 0:
        return []
    if np.any((p < 0) | (p > 1) | np.isnan(p)):
        raise ValueError("p-values must lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    below = p[order] <= alpha * np.arange(1, m + 1) / m
    if not below.any():
        return []
    k = int(np.nonzero(below)[0].max()) + 1
    return sorted(int(v) for v in order[:k])


def bonferroni(p_values, alpha: float = 0.05) -> list[int]:
    alpha = _check_alpha(alpha)
    p = np.asarray(p_values, dtype=float)
    return [int(k) for k in np.nonzero(p <= alpha / max(p.size, 1))[0]]


def individual_error_bound(c2: float, c3: float, n: float, degree: int, C: float = 1.0) -> float:
    """High-probability bound ``C (c2/c3) sqrt(log n / degree)`` on ``|u_hat_i - u_i|``."""
    if degree < 1:
        raise ZeroDegree("vertex has no comparisons")
    if n < 2:
        raise ValueError("need n >= 2")
    return C * (c2 / c3) * math.sqrt(math.log(n) / degree)


def inference_report(u_hat, variance: VarianceEstimate, alpha: float = 0.05, labels=None) -> list[dict]:
    """Per-vertex ``{u_hat, rho, ci_lo, ci_hi}`` records."""
    z = normal_quantile(alpha)
    u_hat = np.asarray(getattr(u_hat, "u", u_hat), dtype=float)
    rows = []
    for k, (u, r) in enumerate(zip(u_hat, variance.rho)):
        if math.isfinite(r):
            half = z * math.sqrt(r)
            row = {"u_hat": float(u), "rho": float(r), "ci_lo": float(u - half), "ci_hi": float(u + half)}
        else:  # isolated vertex
            row = {"u_hat": float(u), "rho": None, "ci_lo": None, "ci_hi": None}
        if labels is not None:
            row = {"label": labels[k], **row}
        rows.append(row)
    return rows
