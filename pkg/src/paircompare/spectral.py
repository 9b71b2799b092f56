"""Spectral objects of the expected Hessian and rate-condition diagnostics.

``-H*`` is a weighted graph Laplacian.  Writing ``D`` for its diagonal, the
normalized adjacency ``A = D^{-1/2} W D^{-1/2}`` and the projector ``P1`` onto
``D^{1/2} 1`` give ``L_sym = I - A`` and ``L_sym^+ = sum_t (A - P1)^t - P1``.

Everything here is dense; it is meant for diagnostics at moderate ``n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .diagnostics import ConstantsReport
from .errors import DimensionMismatch, DisconnectedGraph, InvalidProbability, SeriesDivergence, ZeroDegree
from .graph import ComparisonGraph
from .models import PairwiseModel

MAX_SERIES_DEPTH = 10**6
_EIG_TOL = 1e-10


def expected_hessian(model: PairwiseModel, graph: ComparisonGraph, u) -> np.ndarray:
    """``E[H(u) | edges]``: edge weights are ``m_ij I(u_i - u_j)``."""
    u = np.asarray(getattr(u, "u", u), dtype=float)
    if u.shape != (graph.n,):
        raise DimensionMismatch(f"score vector has length {u.size}, graph has {graph.n} vertices")
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    w = graph.multiplicity * np.asarray(model.pair_fisher_info(u[i] - u[j]), dtype=float)
    H = np.zeros((graph.n, graph.n))
    H[i, j] = w
    H[j, i] = w
    H[np.diag_indices(graph.n)] = -H.sum(axis=1)
    return H


@dataclass
class SpectralBundle:
    H_star: np.ndarray
    D: np.ndarray
    A: np.ndarray
    P1: np.ndarray
    L_sym: np.ndarray
    gap: float
    eigenvalues: np.ndarray

    @property
    def degrees(self) -> np.ndarray:
        return np.diag(self.D)

    def to_dict(self) -> dict:
        return {
            "gap": self.gap,
            "degrees": self.degrees.tolist(),
            "A": self.A.tolist(),
            "P1": self.P1.tolist(),
            "L_sym": self.L_sym.tolist(),
        }


def normalized_components(H_star) -> SpectralBundle:
    """Degree matrix, normalized adjacency, projector and gap of ``-H_star``."""
    H = np.asarray(H_star, dtype=float)
    n = H.shape[0]
    W = H - np.diag(np.diag(H))
    deg = W.sum(axis=1)
    if np.any(deg <= 0):
        raise ZeroDegree(f"vertex {int(np.argmin(deg))} has zero weighted degree")
    s = np.sqrt(deg)
    A = W / np.outer(s, s)
    P1 = np.outer(s, s) / deg.sum()
    L = np.eye(n) - A
    B = A - P1
    eig = np.linalg.eigvalsh((B + B.T) / 2)
    gap = float(np.max(np.abs(eig))) if n > 1 else 0.0
    return SpectralBundle(H, np.diag(deg), A, P1, L, gap, np.linalg.eigvalsh((A + A.T) / 2))


def series_depth(gap: float, tol: float) -> int:
    """Smallest ``T`` with ``gap**T <= tol``."""
    if gap <= 0:
        return 1
    return max(1, math.ceil(math.log(tol) / math.log(gap)))


def laplacian_pseudoinverse(bundle: SpectralBundle, tol: float = 1e-10) -> np.ndarray:
    """Pseudoinverse of ``L_sym`` from the series in ``A - P1`` truncated
    after ``T = series_depth(gap, tol)`` terms.

    ``L^+ L_sym = I - P1 - (A - P1)^T``, so the identity holds to ``tol`` in
    spectral norm.  The ``T`` terms are summed with ``O(log T)`` matrix
    products by binary decomposition of ``T``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    eig = bundle.eigenvalues
    if eig.size > 1 and eig[-2] >= 1.0 - _EIG_TOL:
        raise DisconnectedGraph("normalized Laplacian has a repeated zero eigenvalue")
    if bundle.gap >= 1.0 - _EIG_TOL:
        raise SeriesDivergence("A - P1 has an eigenvalue of modulus one (bipartite graph)")
    depth = series_depth(bundle.gap, tol)
    if depth > MAX_SERIES_DEPTH:
        raise SeriesDivergence(f"series needs {depth} terms (cap {MAX_SERIES_DEPTH})")
    n = bundle.A.shape[0]
    B = bundle.A - bundle.P1
    total = np.zeros((n, n))
    shift = np.eye(n)  # B^(terms summed so far)
    block, Bk = np.eye(n), B  # sum_{t < 2^k} B^t and B^(2^k)
    T = depth
    while T:
        if T & 1:
            total += shift @ block
            shift = shift @ Bk
        T >>= 1
        if T:
            block = block + Bk @ block
            Bk = Bk @ Bk
    return total - bundle.P1


def laplacian_pseudoinverse_exact(bundle: SpectralBundle) -> np.ndarray:
    """Pseudoinverse of ``L_sym`` from its eigendecomposition."""
    L = (bundle.L_sym + bundle.L_sym.T) / 2
    vals, vecs = np.linalg.eigh(L)
    inv = np.where(vals > _EIG_TOL, 1.0 / np.where(vals > _EIG_TOL, vals, 1.0), 0.0)
    return (vecs * inv) @ vecs.T


@dataclass
class ConditionReport:
    alpha_n: float
    beta_n: float
    exist_ratio: float

    @property
    def verdicts(self) -> dict[str, bool]:
        """``True`` where the quantity is below 1 at this ``n``."""
        return {
            "alpha_n": self.alpha_n < 1,
            "beta_n": self.beta_n < 1,
            "exist_ratio": self.exist_ratio < 1,
        }

    def to_dict(self) -> dict:
        return {
            "alpha_n": self.alpha_n,
            "beta_n": self.beta_n,
            "exist_ratio": self.exist_ratio,
            "verdicts": self.verdicts,
        }


def condition_report(n: int, p: float, q: float, constants: ConstantsReport) -> ConditionReport:
    """Evaluate the consistency rate, the normality rate and the existence
    ratio for ``G(n, p, q)`` and the given model constants."""
    if not (0 < p <= q <= 1):
        raise InvalidProbability(f"need 0 < p <= q <= 1, got p={p}, q={q}")
    if n < 2:
        raise ValueError("need n >= 2")
    c = constants
    logn = math.log(n)
    alpha_n = (c.c2 / c.c3) * math.sqrt(q**2 * logn**3 / (n * p**3))
    factor = max(
        c.c2**2 * c.c4**2.5 * c.c5 / c.c3**5,
        c.c2 * c.c4**5.5 / c.c3**6,
    )
    beta_n = factor * math.sqrt(q**10 * logn**8 / (n * p**11))
    log_c1 = abs(math.log(c.c1))
    exist_ratio = logn / (n * p * log_c1) if log_c1 > 0 else math.inf
    return ConditionReport(alpha_n, beta_n, exist_ratio)
