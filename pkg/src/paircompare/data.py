"""Comparison datasets: synthetic generation and CSV ingestion."""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, OutcomeNotInSupport, ParseError, SelfComparison, UnrecognizedScore
from .graph import ComparisonGraph
from .models import OutcomeSupport, PairwiseModel


@dataclass(frozen=True)
class LatentScores:
    """Latent score vector; ``shift`` is what was subtracted to centre it."""

    u: np.ndarray
    centered: bool = True
    shift: float = 0.0

    @classmethod
    def centered_from(cls, u) -> LatentScores:
        u = np.asarray(u, dtype=float)
        mean = float(u.mean())
        return cls(u - mean, True, mean)

    @property
    def dynamic_range(self) -> float:
        return float(self.u.max() - self.u.min()) if self.u.size else 0.0

    def __len__(self) -> int:
        return len(self.u)


def draw_latent_scores(n: int, M: float, rng: np.random.Generator) -> LatentScores:
    """Draw ``u_i ~ Uniform[-M, M]`` independently, then centre."""
    return LatentScores.centered_from(rng.uniform(-M, M, size=n))


@dataclass(frozen=True, eq=False)
class Dataset:
    """Comparison outcomes on a graph.

    One outcome per comparison unit: ``i[k] < j[k]`` and ``x[k]`` is the
    outcome of ``i[k]`` against ``j[k]``.  Units are grouped by edge in the
    graph's edge order.
    """

    graph: ComparisonGraph
    i: np.ndarray
    j: np.ndarray
    x: np.ndarray
    support: OutcomeSupport
    # (order, flipped): unit k came from input row order[k], negated if flipped[order[k]]
    source: tuple[np.ndarray, np.ndarray] | None = None

    @classmethod
    def from_units(cls, n: int, i, j, x, support: OutcomeSupport) -> Dataset:
        """Build from per-comparison arrays in any orientation and order.

        Repeated pairs accumulate multiplicity.
        """
        i = np.asarray(i, dtype=np.int64).ravel()
        j = np.asarray(j, dtype=np.int64).ravel()
        x = support.check(np.asarray(x, dtype=float).ravel())
        if not (len(i) == len(j) == len(x)):
            raise DimensionMismatch("i, j and x must have equal length")
        if np.any(i == j):
            raise SelfComparison("a subject cannot be compared with itself")
        flip = i > j
        lo, hi = np.where(flip, j, i), np.where(flip, i, j)
        x = np.where(flip, -x, x)
        order = np.lexsort((hi, lo))  # stable: keeps input order within an edge
        lo, hi, x = lo[order], hi[order], x[order]
        pairs, counts = np.unique(np.column_stack([lo, hi]).reshape(-1, 2), axis=0, return_counts=True)
        graph = ComparisonGraph(n, pairs, counts)
        return cls(graph, lo, hi, x, support, (order, flip))

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def num_comparisons(self) -> int:
        return len(self.x)

    def outcomes(self, a: int, b: int) -> np.ndarray:
        """All outcomes of ``a`` against ``b`` (negated when ``a > b``)."""
        lo, hi, sign = (a, b, 1.0) if a < b else (b, a, -1.0)
        k0 = np.searchsorted(self._keys, lo * self.n + hi, side="left")
        k1 = np.searchsorted(self._keys, lo * self.n + hi, side="right")
        return sign * self.x[k0:k1]

    def outcome(self, a: int, b: int) -> float:
        vals = self.outcomes(a, b)
        if len(vals) != 1:
            raise KeyError(f"pair ({a}, {b}) has {len(vals)} outcomes")
        return float(vals[0])

    @property
    def _keys(self) -> np.ndarray:
        return self.i * self.n + self.j


def sample_outcomes(
    model: PairwiseModel, u, graph: ComparisonGraph, seed=None, rng: np.random.Generator | None = None
) -> Dataset:
    """Draw one outcome per comparison unit from ``f(.; u_i - u_j)``."""
    u = np.asarray(u.u if isinstance(u, LatentScores) else u, dtype=float)
    if u.shape != (graph.n,):
        raise DimensionMismatch(f"score vector has length {u.size}, graph has {graph.n} vertices")
    rng = np.random.default_rng(seed) if rng is None else rng
    reps = graph.multiplicity
    i = np.repeat(graph.edges[:, 0], reps)
    j = np.repeat(graph.edges[:, 1], reps)
    x = model.sample(u[i] - u[j], rng)
    return Dataset(graph, i, j, np.asarray(x, dtype=float), model.support)


# --- CSV ------------------------------------------------------------------


def _parse_outcome(text: str) -> float:
    return float(text)


def load_csv(path: str | os.PathLike, support: OutcomeSupport) -> tuple[Dataset, list[str]]:
    """Read ``label_i,label_j,outcome`` rows into a dataset.

    A first row whose outcome field is not numeric is treated as a header.
    Labels are mapped to dense ids in order of first appearance; the list of
    labels (indexed by id) is returned alongside the dataset.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        return _read_rows(fh, support)


def loads_csv(text: str, support: OutcomeSupport) -> tuple[Dataset, list[str]]:
    return _read_rows(io.StringIO(text), support)


def _read_rows(fh, support):
    ids: dict[str, int] = {}
    ii, jj, xx = [], [], []
    for lineno, row in enumerate(csv.reader(fh), 1):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise ParseError(f"line {lineno}: expected 3 fields, got {len(row)}")
        a, b, raw = (c.strip() for c in row)
        try:
            x = _parse_outcome(raw)
        except ValueError:
            if lineno == 1:
                continue
            raise ParseError(f"line {lineno}: outcome {raw!r} is not a number") from None
        if not a or not b:
            raise ParseError(f"line {lineno}: empty label")
        if a == b:
            raise SelfComparison(f"line {lineno}: {a!r} compared with itself")
        if not support.contains(x):
            raise OutcomeNotInSupport(f"line {lineno}: outcome {raw} not in support {support}")
        ii.append(ids.setdefault(a, len(ids)))
        jj.append(ids.setdefault(b, len(ids)))
        xx.append(x)
    labels = list(ids)
    return Dataset.from_units(max(len(labels), 1), ii, jj, xx, support), labels


def _format_outcome(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def dumps_csv(dataset: Dataset, labels: list[str] | None = None) -> str:
    """Serialize to ``i,j,outcome`` CSV with a header row.

    Rows come out in the order and orientation they were read in, when known.
    """
    labels = labels if labels is not None else [str(k) for k in range(dataset.n)]
    a, b, x = dataset.i, dataset.j, dataset.x
    if dataset.source is not None:
        order, flip = dataset.source
        inv = np.empty_like(order)
        inv[order] = np.arange(len(order))
        a, b, x = a[inv], b[inv], x[inv]
        a, b, x = np.where(flip, b, a), np.where(flip, a, b), np.where(flip, -x, x)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["i", "j", "outcome"])
    for ai, bi, xi in zip(a, b, x):
        w.writerow([labels[ai], labels[bi], _format_outcome(xi)])
    return buf.getvalue()


def save_csv(dataset: Dataset, path: str | os.PathLike, labels: list[str] | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(dumps_csv(dataset, labels))


_MATCH_SCORES = {"2:0": 2.0, "2:1": 1.0, "1:2": -1.0, "0:2": -2.0}


def map_match_scores(raw: str) -> float:
    """Encode a best-of-3 set score as an outcome in {-2, -1, 1, 2}."""
    key = raw.strip().replace(" ", "")
    try:
        return _MATCH_SCORES[key]
    except KeyError:
        raise UnrecognizedScore(f"not a best-of-3 result: {raw!r}") from None
