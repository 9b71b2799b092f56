"""Numerical checks of a model's validity axioms and regularity constants.

Axioms are certified on a finite ``y`` grid only.  Integrals over a
continuous support use 64-node Gauss-Hermite quadrature re-centred at ``y``
and scaled by the model's noise scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import UnsupportedForContinuousSupport
from .models import PairwiseModel

_GH_NODES, _GH_WEIGHTS = np.polynomial.hermite.hermgauss(64)

AXIOMS = ("A1", "A2", "A3", "A4", "A5")

# Tolerances for the grid checks.
NORMALIZATION_TOL = 1e-8
SYMMETRY_TOL = 1e-10
MONOTONE_TOL = 1e-12
TAIL_Y = 50.0
TAIL_TOL = 1e-6


def _quad_points(model: PairwiseModel, y: float):
    """Nodes and weights turning ``sum w_k h(x_k)`` into ``int h(x) f(x; y) dx``."""
    scale = model.quadrature_scale()
    x = y + math.sqrt(2.0) * scale * _GH_NODES
    return x, _GH_WEIGHTS / math.sqrt(math.pi)


def _outcome_points(model: PairwiseModel, y_grid: np.ndarray) -> np.ndarray:
    if model.support.is_finite:
        return np.array(model.support.values)
    return np.asarray(y_grid, dtype=float)


def total_mass(model: PairwiseModel, y: float) -> float:
    """Sum (finite) or integral (continuous) of ``f(.; y)`` over the support."""
    if model.support.is_finite:
        return float(np.sum(model.pdf(np.array(model.support.values), y)))
    x, w = _quad_points(model, y)
    # divide out the Gaussian weight the nodes already carry
    scale = model.quadrature_scale()
    t = (x - y) / (math.sqrt(2.0) * scale)
    dens = model.pdf(x, y)
    return float(np.sum(_GH_WEIGHTS * np.exp(t * t) * dens) * math.sqrt(2.0) * scale)


def fisher_info_numeric(model: PairwiseModel, y) -> np.ndarray | float:
    """Per-pair Fisher information ``E[g(X; y)^2]`` by summation/quadrature.

    Independent of the closed forms in :mod:`paircompare.models`; used as
    their oracle.
    """
    ys = np.atleast_1d(np.asarray(y, dtype=float))
    out = np.empty_like(ys)
    for k, yk in enumerate(ys):
        if model.support.is_finite:
            vals = np.array(model.support.values)
            f = model.pdf(vals, yk)
            g = model.score(vals, yk)
            out[k] = np.sum(f * g * g)
        else:
            x, w = _quad_points(model, yk)
            out[k] = np.sum(w * model.score(x, yk) ** 2)
    return float(out[0]) if np.ndim(y) == 0 else out


@dataclass
class AxiomCheck:
    passed: bool
    residual: float
    detail: str = ""


@dataclass
class ValidationReport:
    model: str
    grid: str
    axioms: dict[str, AxiomCheck] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.axioms.values())

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "grid": self.grid,
            "passed": self.passed,
            "axioms": {
                k: {"passed": v.passed, "residual": v.residual, "detail": v.detail}
                for k, v in self.axioms.items()
            },
        }


def validate_model(model: PairwiseModel, y_grid) -> ValidationReport:
    """Check the five validity axioms of ``model`` on ``y_grid``.

    A1 normalization, A2 symmetry ``f(x; y) = f(-x; -y)``, A3 stochastic
    monotonicity (``P(X <= x; y)`` non-increasing in ``y`` for every ``x < 0``
    and vanishing far to the right), A4 boundedness and A5 strict
    log-concavity (``dg/dy < 0``).  Failures are recorded, never raised.
    """
    ys = np.sort(np.asarray(y_grid, dtype=float))
    if ys.size == 0:
        raise ValueError("y_grid must be nonempty")
    xs = _outcome_points(model, ys)
    grid = f"{ys.size} points on [{ys[0]:g}, {ys[-1]:g}]"
    report = ValidationReport(model=str(model), grid=grid)

    # A1
    res = max(abs(total_mass(model, y) - 1.0) for y in ys)
    report.axioms["A1"] = AxiomCheck(res <= NORMALIZATION_TOL, res)

    # A2
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    f = np.asarray(model.pdf(X, Y))
    f_ref = np.asarray(model.pdf(-X, -Y))
    res = float(np.max(np.abs(f - f_ref)))
    report.axioms["A2"] = AxiomCheck(res <= SYMMETRY_TOL, res)

    # A3
    neg = xs[xs < 0]
    worst_rise, tail = 0.0, 0.0
    for x in neg:
        cdf = np.asarray(model.lower_cdf(x, ys), dtype=float)
        if cdf.size > 1:
            worst_rise = max(worst_rise, float(np.max(np.diff(cdf))))
        tail = max(tail, float(model.lower_cdf(x, TAIL_Y)))
    ok = worst_rise <= MONOTONE_TOL and tail <= TAIL_TOL
    report.axioms["A3"] = AxiomCheck(
        ok, max(worst_rise, 0.0), f"P(X<=x; y={TAIL_Y:g}) max {tail:.3g} over x<0"
    )

    # A4
    fmax = float(np.max(f))
    ok = bool(np.all(np.isfinite(f)) and np.all(f > 0))
    report.axioms["A4"] = AxiomCheck(ok, fmax, "max f on grid")

    # A5
    d1, _ = model.score_derivatives(X, Y)
    worst = float(np.max(d1))
    report.axioms["A5"] = AxiomCheck(worst < 0, worst, "max dg/dy on grid")
    return report


@dataclass
class ConstantsReport:
    c1: float
    c2: float
    c3: float
    c4: float
    c5: float
    M: float

    @property
    def kappa(self) -> float:
        return self.c4 / self.c3

    def to_dict(self) -> dict:
        return {
            "c1": self.c1, "c2": self.c2, "c3": self.c3, "c4": self.c4,
            "c5": self.c5, "kappa": self.kappa, "M": self.M,
        }


def model_constants(model: PairwiseModel, M: float, grid_step: float = 0.01) -> ConstantsReport:
    """Regularity constants of ``model`` for dynamic range ``M``.

    ``c1`` is the global discrepancy ``P(X >= 0; M)``; ``c3``/``c4``/``c5`` are
    grid extrema of ``|dg/dy|`` and ``|d2g/dy2|`` over ``|y| <= M + 1``.  ``c2``
    is a proxy for the subgaussian norm of the score: ``max |g| / sqrt(ln 2)``
    for finite supports, the exact Gaussian value for the paired cardinal
    model.
    """
    if not (M > 0 and grid_step > 0):
        raise ValueError("M and grid_step must be positive")
    c1 = float(model.prob_nonnegative(M))

    k = int(math.ceil((M + 1) / grid_step))
    ys = np.linspace(-(M + 1), M + 1, 2 * k + 1)
    xs = np.array(model.support.values) if model.support.is_finite else np.array([0.0])
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    d1, d2 = model.score_derivatives(X, Y)
    a1 = np.abs(d1)

    if model.support.is_finite:
        inner = np.abs(ys) <= M
        g = np.abs(model.score(X[:, inner], Y[:, inner]))
        c2 = float(np.max(g)) / math.sqrt(math.log(2.0))
    else:
        c2 = model.subgaussian_norm_exact()
        if c2 is None:
            raise UnsupportedForContinuousSupport(
                f"no subgaussian-norm recipe for {model} on a continuous support"
            )
    return ConstantsReport(
        c1=c1, c2=c2, c3=float(a1.min()), c4=float(a1.max()), c5=float(np.max(np.abs(d2))), M=float(M)
    )
