"""Dense undirected graphs stored as bitset rows, plus seeded random-graph samplers.

Each row of the adjacency is a Python ``int`` whose bit ``v`` is set when the
row's vertex is adjacent to ``v``. Intersections of neighbourhoods are then a
single ``&`` and sizes a single ``int.bit_count``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

Edge = tuple[int, int]


@dataclass(frozen=True)
class Seed:
    """A (master, stream) pair naming one independent random stream.

    Replica ``r`` of an experiment uses ``Seed(master, r)``. Streams are derived
    through :class:`numpy.random.SeedSequence` spawn keys and drive a Philox
    counter-based generator, so no two streams share state.
    """

    master: int
    stream: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.master < 2**64:
            raise ValueError(f"master seed must be a 64-bit unsigned integer, got {self.master}")
        if self.stream < 0:
            raise ValueError(f"stream must be non-negative, got {self.stream}")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.master, spawn_key=(self.stream,))
        return np.random.Generator(np.random.Philox(ss))

    def child(self, index: int) -> Seed:
        """Derive a sub-stream, e.g. the process RNG of a replica whose graph used ``self``."""
        # Pair the stream with a tag so children never collide with sibling replicas.
        return Seed(self.master, (self.stream + 1) * 1_000_003 + index)


def as_generator(rng: np.random.Generator | Seed | int | None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, Seed):
        return rng.generator()
    if rng is None:
        return np.random.default_rng()
    return Seed(int(rng)).generator()


def edge_key(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


@dataclass
class GraphState:
    """Simple undirected graph on vertices ``0..n-1`` with bitset adjacency rows."""

    n: int
    rows: list[int] = field(repr=False)
    edge_count: int = 0

    @classmethod
    def empty(cls, n: int) -> GraphState:
        if n < 0:
            raise ValueError("n must be non-negative")
        return cls(n, [0] * n, 0)

    @classmethod
    def complete(cls, n: int) -> GraphState:
        full = (1 << n) - 1
        return cls(n, [full & ~(1 << v) for v in range(n)], comb(n, 2))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Edge]) -> GraphState:
        g = cls.empty(n)
        for u, v in edges:
            g.add_edge(int(u), int(v))
        return g

    def copy(self) -> GraphState:
        return GraphState(self.n, list(self.rows), self.edge_count)

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.rows[u] >> v & 1)

    def add_edge(self, u: int, v: int) -> None:
        if u == v:
            raise ValueError(f"self-loop at vertex {u}")
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise ValueError(f"edge ({u}, {v}) out of range for n={self.n}")
        if self.has_edge(u, v):
            return
        self.rows[u] |= 1 << v
        self.rows[v] |= 1 << u
        self.edge_count += 1

    def degree(self, v: int) -> int:
        return self.rows[v].bit_count()

    def edges(self) -> Iterator[Edge]:
        """Yield edges ``(u, v)`` with ``u < v`` in lexicographic order."""
        for u, row in enumerate(self.rows):
            higher = row >> (u + 1)
            while higher:
                low = higher & -higher
                yield (u, u + low.bit_length())
                higher ^= low

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=bool)
        for u, v in self.edges():
            a[u, v] = a[v, u] = True
        return a

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GraphState):
            return NotImplemented
        return self.n == other.n and self.rows == other.rows

    # ------------------------------------------------------------------ io
    def to_edgelist(self) -> str:
        lines = [f"{self.n} {self.edge_count}"]
        lines.extend(f"{u} {v}" for u, v in self.edges())
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_edgelist())

    @classmethod
    def from_edgelist(cls, text: str) -> GraphState:
        """Parse the ``n m`` header plus ``u v`` lines format; errors carry 1-based line numbers."""
        lines = text.splitlines()
        if not lines:
            raise EdgeListError(1, "missing 'n m' header")
        header = lines[0].split()
        try:
            n, m = (int(x) for x in header)
        except ValueError:
            raise EdgeListError(1, f"expected 'n m', got {lines[0]!r}") from None
        g = cls.empty(n)
        seen = 0
        for lineno, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            parts = line.split()
            try:
                u, v = (int(x) for x in parts)
            except ValueError:
                raise EdgeListError(lineno, f"expected 'u v', got {line!r}") from None
            if not (0 <= u < v < n):
                raise EdgeListError(lineno, f"pair ({u}, {v}) must satisfy 0 <= u < v < {n}")
            if g.has_edge(u, v):
                raise EdgeListError(lineno, f"duplicate edge ({u}, {v})")
            g.add_edge(u, v)
            seen += 1
        if seen != m:
            raise EdgeListError(1, f"header declares {m} edges but {seen} were listed")
        return g

    @classmethod
    def load(cls, path: str | Path) -> GraphState:
        return cls.from_edgelist(Path(path).read_text())


class EdgeListError(ValueError):
    def __init__(self, lineno: int, message: str) -> None:
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def validate_graph(g: GraphState) -> None:
    """Raise AssertionError if symmetry, loop-freeness or the edge count is broken."""
    total = 0
    for u, row in enumerate(g.rows):
        assert not row >> u & 1, f"self-loop at {u}"
        assert row >> g.n == 0, f"row {u} has bits beyond n"
        r = row
        while r:
            low = r & -r
            v = low.bit_length() - 1
            assert g.rows[v] >> u & 1, f"asymmetric pair ({u}, {v})"
            r ^= low
        total += row.bit_count()
    assert total == 2 * g.edge_count, f"edge_count {g.edge_count} != {total // 2}"


def _from_upper_mask(n: int, mask: np.ndarray) -> GraphState:
    iu, ju = np.triu_indices(n, 1)
    a = np.zeros((n, n), dtype=bool)
    a[iu[mask], ju[mask]] = True
    a |= a.T
    packed = np.packbits(a, axis=1, bitorder="little")
    rows = [int.from_bytes(packed[v].tobytes(), "little") for v in range(n)]
    return GraphState(n, rows, int(mask.sum()))


def sample_gnp(n: int, p: float, seed: Seed | np.random.Generator | int) -> GraphState:
    """Erdos-Renyi G(n, p): every pair is an edge independently with probability ``p``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    rng = as_generator(seed)
    mask = rng.random(comb(n, 2)) < p
    return _from_upper_mask(n, mask)


def sample_gnm(n: int, m: int, seed: Seed | np.random.Generator | int) -> GraphState:
    """Uniform graph on ``n`` vertices with exactly ``m`` edges."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    total = comb(n, 2)
    if not 0 <= m <= total:
        raise ValueError(f"m must lie in [0, {total}], got {m}")
    rng = as_generator(seed)
    chosen = rng.choice(total, size=m, replace=False)
    mask = np.zeros(total, dtype=bool)
    mask[chosen] = True
    return _from_upper_mask(n, mask)


def remove_edges(g: GraphState, edges: Iterable[Edge], *, inplace: bool = False) -> GraphState:
    """Delete ``edges`` from ``g``. Deleting a pair that is not an edge raises ``KeyError``."""
    edges = {edge_key(u, v) for u, v in edges}
    for u, v in edges:
        if u == v or not g.rows[u] >> v & 1:
            raise KeyError(f"({u}, {v}) is not an edge of the graph")
    out = g if inplace else g.copy()
    rows = out.rows
    for u, v in edges:
        rows[u] &= ~(1 << v)
        rows[v] &= ~(1 << u)
        out.edge_count -= 1
    return out
