"""Pairwise comparison models.

A model is a single-parameter family ``f(x; y)`` giving the law of the
outcome ``x`` of a comparison between two subjects whose latent scores
differ by ``y``.  Every model here exposes the log-density, the score
``g = d/dy log f``, its first two derivatives in ``y`` and the closed-form
per-pair Fisher information ``I(y) = E[g(X; y)^2]``.

All evaluation methods broadcast over array inputs.  Scalar inputs give
Python floats back.

Available models (identifier, parameters):

- ``bt``         Bradley-Terry, outcomes {-1, 1}
- ``thurstone``  Thurstone-Mosteller, outcomes {-1, 1}
- ``rao-kupper`` Rao-Kupper with ties, outcomes {-1, 0, 1}, ``theta > 1``
- ``davidson``   Davidson with ties, outcomes {-1, 0, 1}, ``theta > 0``
- ``clm4``       logistic cumulative link, outcomes {-2, -1, 1, 2}, ``theta > 1``
- ``cardinal``   paired cardinal (Gaussian), outcomes on the real line, ``sigma > 0``
"""

from __future__ import annotations

import dataclasses
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import ClassVar

import numpy as np
from scipy.special import expit, log_ndtr, logsumexp, ndtr

from .errors import InvalidParameter, OutcomeNotInSupport, UnknownModel

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _out(a):
    a = np.asarray(a, dtype=float)
    return float(a) if a.ndim == 0 else a


@dataclass(frozen=True)
class OutcomeSupport:
    """Set of possible comparison outcomes.

    ``kind`` is ``"finite"`` (with ``values`` listed in increasing order) or
    ``"real-line"``.
    """

    kind: str
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("finite", "real-line"):
            raise ValueError(f"unknown support kind {self.kind!r}")
        if self.kind == "finite":
            vals = tuple(float(v) for v in self.values)
            if not vals:
                raise ValueError("finite support needs at least one value")
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise ValueError("support values must be strictly increasing")
            if sorted(-v for v in vals) != list(vals):
                raise ValueError("support must be symmetric about zero")
            object.__setattr__(self, "values", vals)
        elif self.values:
            raise ValueError("real-line support takes no values")

    @classmethod
    def finite(cls, values) -> OutcomeSupport:
        return cls("finite", tuple(values))

    @classmethod
    def real_line(cls) -> OutcomeSupport:
        return cls("real-line")

    @property
    def is_finite(self) -> bool:
        return self.kind == "finite"

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.is_finite:
            return np.isin(x, self.values)
        return np.isfinite(x)

    def check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        ok = self.contains(x)
        if not np.all(ok):
            bad = np.atleast_1d(x)[~np.atleast_1d(ok)][0]
            raise OutcomeNotInSupport(f"outcome {bad!r} not in support {self}")
        return x

    def __str__(self) -> str:
        if self.is_finite:
            return "{" + ", ".join(f"{v:g}" for v in self.values) + "}"
        return "R"


class PairwiseModel(ABC):
    """Valid parameterization ``f(x; y)`` of a pairwise comparison model."""

    name: ClassVar[str]
    support: ClassVar[OutcomeSupport]

    @property
    def params(self) -> dict[str, float]:
        return dataclasses.asdict(self)

    def __str__(self) -> str:
        ps = ",".join(f"{k}={v:g}" for k, v in self.params.items())
        return f"{self.name}({ps})"

    # evaluation ---------------------------------------------------------

    @abstractmethod
    def _derivs(self, x: np.ndarray, y: np.ndarray, order: int) -> list[np.ndarray]:
        """Return ``[log f, g, dg, d2g][: order + 1]`` for broadcast ``x, y``."""

    def _eval(self, x, y, order):
        x = self.support.check(x)
        y = np.asarray(y, dtype=float)
        x, y = np.broadcast_arrays(x, y)
        return self._derivs(x, y, order)

    def logpdf(self, x, y):
        return _out(self._eval(x, y, 0)[0])

    def pdf(self, x, y):
        """Probability mass (finite support) or density of outcome ``x``."""
        return _out(np.exp(self._eval(x, y, 0)[0]))

    def score(self, x, y):
        """Fisher score ``g(x; y) = d/dy log f(x; y)``."""
        return _out(self._eval(x, y, 1)[1])

    def score_derivatives(self, x, y):
        """First and second ``y``-derivatives of the score."""
        _, _, d1, d2 = self._eval(x, y, 3)
        return _out(d1), _out(d2)

    @abstractmethod
    def pair_fisher_info(self, y):
        """Closed-form per-comparison Fisher information at difference ``y``."""

    @abstractmethod
    def sample(self, y, rng: np.random.Generator) -> np.ndarray:
        """Draw one outcome for each entry of ``y``."""

    @abstractmethod
    def prob_nonnegative(self, y):
        """``P(X >= 0)`` under ``f(.; y)``."""

    def lower_cdf(self, x, y):
        """``P(X <= x)`` under ``f(.; y)``."""
        raise NotImplementedError

    def vanishing_at_plus_infinity(self) -> frozenset[float] | None:
        """Outcomes with ``f(x; y) -> 0`` as ``y -> +inf``.

        ``None`` means every outcome vanishes (continuous support).
        """
        if not self.support.is_finite:
            return None
        vals = np.array(self.support.values)
        lp = self._derivs(vals, np.full_like(vals, 500.0), 0)[0]
        return frozenset(float(v) for v, l in zip(vals, lp) if l < -30.0)

    def subgaussian_norm_exact(self) -> float | None:
        """Exact maximal psi_2 norm of the score, when available in closed form."""
        return None

    def quadrature_scale(self) -> float:
        return 1.0


# --- finite-support models built from ratios of exponential sums ----------


def _lse_moments(y, logc, d, order):
    """Log-sum-exp of ``c_k exp(d_k y)`` and the first three central moments
    of ``d`` under the softmax weights."""
    a = logc[:, None] + d[:, None] * y[None, :]
    lse = logsumexp(a, axis=0)
    if order == 0:
        return lse, None, None, None
    w = np.exp(a - lse)
    m = d @ w
    dev = d[:, None] - m[None, :]
    var = np.einsum("kn,kn->n", w, dev**2) if order >= 2 else None
    third = np.einsum("kn,kn->n", w, dev**3) if order >= 3 else None
    return lse, m, var, third


@dataclass(frozen=True)
class _Term:
    """``log f = const + slope * y - sum_k log(sum_m c_km exp(d_km y))``."""

    const: float
    slope: float
    denominators: tuple[tuple[tuple[float, ...], tuple[float, ...]], ...]


class _ExpRatioModel(PairwiseModel):
    @abstractmethod
    def _terms(self) -> dict[float, _Term]: ...

    def _derivs(self, x, y, order):
        shape = x.shape
        x, y = x.ravel(), y.ravel()
        res = [np.empty_like(y) for _ in range(order + 1)]
        for v, term in self._terms().items():
            mask = x == v
            if not mask.any():
                continue
            ym = y[mask]
            logf = term.const + term.slope * ym
            g = np.full_like(ym, term.slope)
            d1 = np.zeros_like(ym)
            d2 = np.zeros_like(ym)
            for c, d in term.denominators:
                lse, m, var, third = _lse_moments(ym, np.log(np.asarray(c)), np.asarray(d, float), order)
                logf -= lse
                if order >= 1:
                    g -= m
                if order >= 2:
                    d1 -= var
                if order >= 3:
                    d2 -= third
            for r, val in zip(res, (logf, g, d1, d2)):
                r[mask] = val
        return [r.reshape(shape) for r in res]

    def _pmf_matrix(self, y):
        y = np.atleast_1d(np.asarray(y, dtype=float)).ravel()
        vals = np.array(self.support.values)
        xs, ys = np.meshgrid(vals, y, indexing="ij")
        return np.exp(self._derivs(xs, ys, 0)[0])

    def sample(self, y, rng):
        y = np.asarray(y, dtype=float)
        probs = self._pmf_matrix(y)
        cum = np.cumsum(probs, axis=0)
        u = rng.random(probs.shape[1])
        idx = np.minimum((u[None, :] > cum).sum(axis=0), probs.shape[0] - 1)
        return np.array(self.support.values)[idx].reshape(y.shape)

    def prob_nonnegative(self, y):
        probs = self._pmf_matrix(y)
        keep = np.array(self.support.values) >= 0
        return _out(probs[keep].sum(axis=0).reshape(np.shape(y)))

    def lower_cdf(self, x, y):
        probs = self._pmf_matrix(y)
        keep = np.array(self.support.values) <= x
        return _out(probs[keep].sum(axis=0).reshape(np.shape(y)))


@dataclass(frozen=True)
class BradleyTerry(_ExpRatioModel):
    name: ClassVar[str] = "bt"
    support: ClassVar[OutcomeSupport] = OutcomeSupport.finite((-1, 1))

    def _terms(self):
        den = (((1.0, 1.0), (0.0, 1.0)),)
        return {1.0: _Term(0.0, 1.0, den), -1.0: _Term(0.0, 0.0, den)}

    def pair_fisher_info(self, y):
        y = np.asarray(y, dtype=float)
        return _out(expit(y) * expit(-y))


@dataclass(frozen=True)
class RaoKupper(_ExpRatioModel):
    theta: float = 2.0

    name: ClassVar[str] = "rao-kupper"
    support: ClassVar[OutcomeSupport] = OutcomeSupport.finite((-1, 0, 1))

    def __post_init__(self):
        if not self.theta > 1:
            raise InvalidParameter(f"rao-kupper needs theta > 1, got {self.theta}")

    def _terms(self):
        th = self.theta
        win = ((1.0, th), (1.0, 0.0))  # e^y + theta
        lose = ((th, 1.0), (1.0, 0.0))  # theta e^y + 1
        return {
            1.0: _Term(0.0, 1.0, (win,)),
            0.0: _Term(math.log(th * th - 1.0), 1.0, (win, lose)),
            -1.0: _Term(0.0, 0.0, (lose,)),
        }

    def pair_fisher_info(self, y):
        th = self.theta
        # I is even in y; evaluate on the side where e^y <= 1
        t = np.exp(-np.abs(np.asarray(y, dtype=float)))
        out = (
            th**2 * t / (th + t) ** 3
            + th**2 * (th**2 - 1) * t * (1 - t**2) ** 2 / ((t + th) ** 3 * (th * t + 1) ** 3)
            + th**2 * t**2 / (th * t + 1) ** 3
        )
        return _out(out)


@dataclass(frozen=True)
class Davidson(_ExpRatioModel):
    theta: float = 1.0

    name: ClassVar[str] = "davidson"
    support: ClassVar[OutcomeSupport] = OutcomeSupport.finite((-1, 0, 1))

    def __post_init__(self):
        if not self.theta > 0:
            raise InvalidParameter(f"davidson needs theta > 0, got {self.theta}")

    def _terms(self):
        den = (((1.0, self.theta, 1.0), (1.0, 0.5, 0.0)),)
        return {
            1.0: _Term(0.0, 1.0, den),
            0.0: _Term(math.log(self.theta), 0.5, den),
            -1.0: _Term(0.0, 0.0, den),
        }

    def pair_fisher_info(self, y):
        th = self.theta
        y = -np.abs(np.asarray(y, dtype=float))
        t, s = np.exp(y), np.exp(y / 2)
        num = t * (th * s + 2) ** 2 + th * s * (1 - t) ** 2 + (2 * t + th * s) ** 2
        return _out(num / (4 * (t + th * s + 1) ** 3))


@dataclass(frozen=True)
class CumulativeLink4(_ExpRatioModel):
    """Logistic cumulative link model with outcomes {-2, -1, 1, 2}.

    ``f(2; y) = e^y / (theta + e^y)`` and
    ``f(1; y) = (theta - 1) e^y / ((theta + e^y)(1 + e^y))``; the losing
    outcomes follow from ``f(-x; -y) = f(x; y)``.
    """

    theta: float = 2.32

    name: ClassVar[str] = "clm4"
    support: ClassVar[OutcomeSupport] = OutcomeSupport.finite((-2, -1, 1, 2))

    def __post_init__(self):
        if not self.theta > 1:
            raise InvalidParameter(f"clm4 needs theta > 1, got {self.theta}")

    def _terms(self):
        th = self.theta
        a = ((1.0, th), (1.0, 0.0))  # e^y + theta
        b = ((1.0, 1.0), (1.0, 0.0))  # e^y + 1
        c = ((th, 1.0), (1.0, 0.0))  # theta e^y + 1
        lc = math.log(th - 1.0)
        return {
            2.0: _Term(0.0, 1.0, (a,)),
            1.0: _Term(lc, 1.0, (a, b)),
            -1.0: _Term(lc, 1.0, (c, b)),
            -2.0: _Term(0.0, 0.0, (c,)),
        }

    def pair_fisher_info(self, y):
        th = self.theta
        t = np.exp(-np.abs(np.asarray(y, dtype=float)))
        out = (
            th**2 * t / (th + t) ** 3
            + th**2 * t**2 / (th * t + 1) ** 3
            + (th - 1) * t / (1 + t) ** 3
            * ((th - t**2) ** 2 / (th + t) ** 3 + (1 - th * t**2) ** 2 / (th * t + 1) ** 3)
        )
        return _out(out)


@dataclass(frozen=True)
class ThurstoneMosteller(PairwiseModel):
    name: ClassVar[str] = "thurstone"
    support: ClassVar[OutcomeSupport] = OutcomeSupport.finite((-1, 1))

    @staticmethod
    def _mills(y):
        # phi(y) / Phi(y) and its first two derivatives
        m = np.exp(-0.5 * y * y - _LOG_SQRT_2PI - log_ndtr(y))
        m1 = -m * (y + m)
        m2 = -m1 * (y + m) - m * (1 + m1)
        return m, m1, m2

    def _derivs(self, x, y, order):
        # f(1; y) = Phi(y), f(-1; y) = Phi(-y)
        sgn = np.where(x > 0, 1.0, -1.0)
        z = sgn * y
        out = [log_ndtr(z)]
        if order >= 1:
            m, m1, m2 = self._mills(z)
            out += [sgn * m, m1, sgn * m2]
        return out[: order + 1]

    def pair_fisher_info(self, y):
        y = np.asarray(y, dtype=float)
        logphi = -0.5 * y * y - _LOG_SQRT_2PI
        return _out(np.exp(2 * logphi - log_ndtr(y) - log_ndtr(-y)))

    def sample(self, y, rng):
        y = np.asarray(y, dtype=float)
        u = rng.random(y.shape)
        return np.where(u < ndtr(y), 1.0, -1.0)

    def prob_nonnegative(self, y):
        return _out(ndtr(np.asarray(y, dtype=float)))

    def lower_cdf(self, x, y):
        y = np.asarray(y, dtype=float)
        if x < -1:
            return _out(np.zeros_like(y))
        if x < 1:
            return _out(ndtr(-y))
        return _out(np.ones_like(y))


@dataclass(frozen=True)
class PairedCardinal(PairwiseModel):
    """Gaussian outcome ``X ~ N(y, sigma^2)``."""

    sigma: float = 2.0

    name: ClassVar[str] = "cardinal"
    support: ClassVar[OutcomeSupport] = OutcomeSupport.real_line()

    def __post_init__(self):
        if not self.sigma > 0:
            raise InvalidParameter(f"cardinal needs sigma > 0, got {self.sigma}")

    def _derivs(self, x, y, order):
        s2 = self.sigma**2
        r = x - y
        out = [-0.5 * r * r / s2 - _LOG_SQRT_2PI - math.log(self.sigma)]
        if order >= 1:
            out += [r / s2, np.full_like(r, -1.0 / s2), np.zeros_like(r)]
        return out[: order + 1]

    def pair_fisher_info(self, y):
        return _out(np.full_like(np.asarray(y, dtype=float), 1.0 / self.sigma**2))

    def sample(self, y, rng):
        y = np.asarray(y, dtype=float)
        return y + self.sigma * rng.standard_normal(y.shape)

    def prob_nonnegative(self, y):
        return _out(ndtr(np.asarray(y, dtype=float) / self.sigma))

    def lower_cdf(self, x, y):
        return _out(ndtr((x - np.asarray(y, dtype=float)) / self.sigma))

    def subgaussian_norm_exact(self):
        # g(X; y) ~ N(0, 1/sigma^2); a N(0, s^2) variable has psi_2 norm s*sqrt(8/3)
        return math.sqrt(8.0 / 3.0) / self.sigma

    def quadrature_scale(self) -> float:
        return self.sigma


MODELS: dict[str, type[PairwiseModel]] = {
    "bt": BradleyTerry,
    "thurstone": ThurstoneMosteller,
    "rao-kupper": RaoKupper,
    "davidson": Davidson,
    "clm4": CumulativeLink4,
    "cardinal": PairedCardinal,
}

_ALIASES = {
    "bradley-terry": "bt",
    "thurstone-mosteller": "thurstone",
    "raokupper": "rao-kupper",
    "rk": "rao-kupper",
    "paired-cardinal": "cardinal",
}


def make_model(name: str, **params: float) -> PairwiseModel:
    """Build a model from its identifier (case-insensitive) and parameters."""
    key = name.strip().lower().replace("_", "-")
    key = _ALIASES.get(key, key)
    try:
        cls = MODELS[key]
    except KeyError:
        raise UnknownModel(f"unknown model {name!r}; choose from {', '.join(MODELS)}") from None
    names = {f.name for f in dataclasses.fields(cls)}
    extra = set(params) - names
    if extra:
        raise InvalidParameter(f"model {key!r} does not take parameter(s) {sorted(extra)}")
    return cls(**{k: float(v) for k, v in params.items()})


def parse_params(text: str | None) -> dict[str, float]:
    """Parse ``"theta=2.32,sigma=1"`` into a dict."""
    out: dict[str, float] = {}
    if not text:
        return out
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        key, sep, val = item.partition("=")
        if not sep:
            raise InvalidParameter(f"expected name=value, got {item!r}")
        try:
            out[key.strip()] = float(val)
        except ValueError:
            raise InvalidParameter(f"parameter {key.strip()!r} is not a number: {val!r}") from None
    return out
