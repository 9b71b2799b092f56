"""Comparison graphs and the G(n, p, q) random-graph sampler."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import InvalidProbability, ParseError, SelfComparison, VertexOutOfRange

SAMPLER_RULES = ("uniform", "constant-p", "constant-q", "directed-uniform")


@dataclass(frozen=True, eq=False)
class ComparisonGraph:
    """Undirected simple graph on vertices ``0..n-1`` with edge multiplicities.

    ``edges`` is an ``(E, 2)`` integer array with ``i < j`` in each row, sorted
    lexicographically; ``multiplicity`` holds the number of comparisons per
    edge.
    """

    n: int
    edges: np.ndarray
    multiplicity: np.ndarray = field(default=None)

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise ValueError("graph needs at least one vertex")
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        mult = (
            np.ones(len(e), dtype=np.int64)
            if self.multiplicity is None
            else np.asarray(self.multiplicity, dtype=np.int64).ravel()
        )
        if mult.shape != (len(e),):
            raise ValueError("multiplicity must have one entry per edge")
        if np.any(mult < 1):
            raise ValueError("multiplicities must be positive")
        if len(e):
            if e.min() < 0 or e.max() >= n:
                raise VertexOutOfRange(f"edge endpoint outside [0, {n})")
            if np.any(e[:, 0] == e[:, 1]):
                raise SelfComparison("self-loops are not allowed")
            e = np.sort(e, axis=1)
            order = np.lexsort((e[:, 1], e[:, 0]))
            e, mult = e[order], mult[order]
            if np.any(np.all(e[1:] == e[:-1], axis=1)):
                raise ValueError("duplicate edge; use multiplicity instead")
        e.setflags(write=False)
        mult.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "multiplicity", mult)

    @classmethod
    def from_edges(cls, n: int, edges, multiplicity=None) -> ComparisonGraph:
        return cls(n, np.asarray(list(edges), dtype=np.int64).reshape(-1, 2), multiplicity)

    @classmethod
    def complete(cls, n: int) -> ComparisonGraph:
        i, j = np.triu_indices(n, k=1)
        return cls(n, np.column_stack([i, j]))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def _csr(self) -> sp.csr_matrix:
        i, j = self.edges[:, 0], self.edges[:, 1]
        w = self.multiplicity.astype(float)
        a = sp.coo_matrix(
            (np.concatenate([w, w]), (np.concatenate([i, j]), np.concatenate([j, i]))),
            shape=(self.n, self.n),
        )
        return a.tocsr()

    def adjacency(self) -> sp.csr_matrix:
        """Sparse symmetric adjacency with multiplicities as weights."""
        return self._csr.copy()

    def _check_vertex(self, i: int) -> int:
        if not 0 <= i < self.n:
            raise VertexOutOfRange(f"vertex {i} outside [0, {self.n})")
        return int(i)

    def neighborhood(self, i: int) -> list[int]:
        i = self._check_vertex(i)
        a = self._csr
        return sorted(int(j) for j in a.indices[a.indptr[i] : a.indptr[i + 1]])

    def degree(self, i: int) -> int:
        i = self._check_vertex(i)
        return int(self._csr.indptr[i + 1] - self._csr.indptr[i])

    def degrees(self) -> np.ndarray:
        """Number of distinct neighbours of every vertex."""
        return np.diff(self._csr.indptr)

    def weighted_degrees(self) -> np.ndarray:
        """Number of comparisons (multiplicity-weighted) of every vertex."""
        return np.asarray(self._csr.sum(axis=1)).ravel()

    def is_connected(self) -> bool:
        if self.n == 1:
            return True
        ncomp, _ = connected_components(self._csr, directed=False)
        return ncomp == 1

    def to_edge_list(self) -> str:
        lines = [f"# n={self.n}"]
        for (i, j), m in zip(self.edges, self.multiplicity):
            lines.append(f"{i} {j}" if m == 1 else f"{i} {j} {m}")
        return "\n".join(lines) + "\n"


def read_edge_list(path: str | os.PathLike, n: int | None = None) -> ComparisonGraph:
    """Read ``"i j [multiplicity]"`` lines; ``#`` starts a comment.

    The vertex count comes from ``n``, a ``# n=<count>`` header, or the
    largest id seen.
    """
    edges, mult = [], []
    header_n = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            body, _, comment = raw.partition("#")
            comment = comment.strip()
            if comment.startswith("n=") and header_n is None:
                try:
                    header_n = int(comment[2:])
                except ValueError:
                    raise ParseError(f"line {lineno}: bad vertex-count header") from None
            parts = body.split()
            if not parts:
                continue
            if len(parts) not in (2, 3):
                raise ParseError(f"line {lineno}: expected 'i j [multiplicity]'")
            try:
                vals = [int(p) for p in parts]
            except ValueError:
                raise ParseError(f"line {lineno}: non-integer field") from None
            edges.append(vals[:2])
            mult.append(vals[2] if len(vals) == 3 else 1)
    if n is None:
        n = header_n if header_n is not None else (max(max(e) for e in edges) + 1 if edges else 1)
    return ComparisonGraph(n, np.array(edges, dtype=np.int64).reshape(-1, 2), np.array(mult, dtype=np.int64))


@dataclass(frozen=True)
class GraphSamplerConfig:
    """Parameters of a G(n, p, q) draw.

    Rules for the per-pair probabilities ``p_ij``:

    - ``uniform``: ``p_ij ~ Uniform[p, q]`` drawn once per unordered pair.
    - ``constant-p`` / ``constant-q``: every ``p_ij`` equals ``p`` / ``q``.
    - ``directed-uniform``: each ordered pair ``(i, j)`` and ``(j, i)`` gets its
      own ``Uniform[p, q]`` probability and Bernoulli trial; the undirected
      edge is present when either trial succeeds, i.e. with probability
      ``1 - (1 - a)(1 - b)``.
    """

    n: int
    p: float
    q: float
    rule: str = "uniform"
    seed: int | None = None

    def __post_init__(self):
        if not (0.0 <= self.p <= self.q <= 1.0):
            raise InvalidProbability(f"need 0 <= p <= q <= 1, got p={self.p}, q={self.q}")
        if self.rule not in SAMPLER_RULES:
            raise ValueError(f"unknown rule {self.rule!r}; choose from {SAMPLER_RULES}")
        if self.n < 1:
            raise ValueError("n must be positive")


def sample_graph(config: GraphSamplerConfig, rng: np.random.Generator | None = None) -> ComparisonGraph:
    """Draw a comparison graph.

    Random numbers are consumed pair by pair in row-major order over
    ``i < j``, so a fixed seed always yields the same graph.
    """
    rng = np.random.default_rng(config.seed) if rng is None else rng
    n, p, q = config.n, config.p, config.q
    i, j = np.triu_indices(n, k=1)
    m = len(i)
    if config.rule == "uniform":
        probs = rng.uniform(p, q, size=m)
        keep = rng.random(m) < probs
    elif config.rule == "constant-p":
        keep = rng.random(m) < p
    elif config.rule == "constant-q":
        keep = rng.random(m) < q
    else:
        probs = rng.uniform(p, q, size=(m, 2))
        keep = np.any(rng.random((m, 2)) < probs, axis=1)
    return ComparisonGraph(n, np.column_stack([i[keep], j[keep]]))
