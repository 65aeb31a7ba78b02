"""Exact k-clique counting, listing, uniform sampling and the deletion-aware clique index."""

from __future__ import annotations

import itertools
from collections import OrderedDict
from dataclasses import dataclass
from math import comb
from typing import Iterator

import numpy as np

from .graph import Edge, GraphState, as_generator, edge_key

Clique = tuple[int, ...]

DEFAULT_INDEX_CAP = 50_000_000
BRUTE_FORCE_GUARD = 10_000_000


class CapacityError(RuntimeError):
    """Raised when clique enumeration or indexing would exceed its memory guard."""

    def __init__(self, cap: int, count: int, what: str = "cliques") -> None:
        super().__init__(
            f"{what} exceeded cap={cap} (running count {count}); "
            "reduce n, raise k, or raise the cap"
        )
        self.cap = cap
        self.count = count


def _bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _count_within(rows: list[int], cand: int, r: int) -> int:
    """Number of r-cliques inside the vertex set ``cand``."""
    if r == 0:
        return 1
    if r == 1:
        return cand.bit_count()
    total = 0
    while cand.bit_count() >= r:
        low = cand & -cand
        cand ^= low
        v = low.bit_length() - 1
        sub = cand & rows[v]
        if r == 2:
            total += sub.bit_count()
        elif sub.bit_count() >= r - 1:
            total += _count_within(rows, sub, r - 1)
    return total


def _collect_within(rows: list[int], cand: int, r: int, prefix: tuple[int, ...], out: list[Clique]) -> None:
    """Append every r-clique inside ``cand`` (extending ``prefix``) to ``out`` in lexicographic order."""
    if r == 1:
        out.extend(prefix + (v,) for v in _bits(cand))
        return
    while cand.bit_count() >= r:
        low = cand & -cand
        cand ^= low
        v = low.bit_length() - 1
        sub = cand & rows[v]
        if sub.bit_count() >= r - 1:
            _collect_within(rows, sub, r - 1, prefix + (v,), out)


def _list_within(rows: list[int], cand: int, r: int) -> Iterator[Clique]:
    # lazy over the smallest vertex, eager below it: deep generator chains are slow
    if r == 0:
        yield ()
        return
    while cand.bit_count() >= r:
        low = cand & -cand
        cand ^= low
        v = low.bit_length() - 1
        if r == 1:
            yield (v,)
            continue
        batch: list[Clique] = []
        _collect_within(rows, cand & rows[v], r - 1, (v,), batch)
        yield from batch


def _check_k(g: GraphState, k: int) -> None:
    if not 1 <= k <= g.n:
        raise ValueError(f"k must satisfy 1 <= k <= n={g.n}, got {k}")


def count_cliques(g: GraphState, k: int) -> int:
    _check_k(g, k)
    return _count_within(g.rows, (1 << g.n) - 1, k)


def brute_force_count(g: GraphState, k: int) -> int:
    """Count k-cliques by testing every k-subset. Test oracle only."""
    _check_k(g, k)
    if comb(g.n, k) > BRUTE_FORCE_GUARD:
        raise CapacityError(BRUTE_FORCE_GUARD, comb(g.n, k), "brute-force subsets")
    return sum(1 for s in itertools.combinations(range(g.n), k) if _is_clique(g, s))


def _is_clique(g: GraphState, vertices) -> bool:
    rows = g.rows
    return all(rows[u] >> v & 1 for u, v in itertools.combinations(vertices, 2))


def enumerate_cliques(g: GraphState, k: int, cap: int | None = None) -> Iterator[Clique]:
    """Yield every k-clique once as a sorted vertex tuple, in lexicographic order.

    Raises :class:`CapacityError` as soon as more than ``cap`` cliques have been produced.
    """
    _check_k(g, k)
    for count, clique in enumerate(_list_within(g.rows, (1 << g.n) - 1, k), start=1):
        if cap is not None and count > cap:
            raise CapacityError(cap, count)
        yield clique


_SAMPLE_CACHE: OrderedDict[tuple, list[Clique]] = OrderedDict()
_SAMPLE_CACHE_ENTRIES = 4
_SAMPLE_CACHE_MAX_CLIQUES = 1 << 16


def _cached_cliques(g: GraphState, k: int, cap: int) -> list[Clique]:
    # repeated draws on an unchanged small graph reuse the enumeration; the key is
    # the full bitset content, so any mutation of the graph misses the cache
    key = (g.n, k, tuple(g.rows))
    hit = _SAMPLE_CACHE.get(key)
    if hit is not None:
        if cap is not None and len(hit) > cap:
            raise CapacityError(cap, cap + 1)
        _SAMPLE_CACHE.move_to_end(key)
        return hit
    cliques = list(enumerate_cliques(g, k, cap))
    if len(cliques) <= _SAMPLE_CACHE_MAX_CLIQUES:
        _SAMPLE_CACHE[key] = cliques
        if len(_SAMPLE_CACHE) > _SAMPLE_CACHE_ENTRIES:
            _SAMPLE_CACHE.popitem(last=False)
    return cliques


def sample_uniform_clique(
    g: GraphState, k: int, rng=None, cap: int = DEFAULT_INDEX_CAP
) -> Clique | None:
    """Exactly uniform k-clique of ``g``, or ``None`` when there is none.

    Two-phase: enumerate under ``cap``, then draw. Use :meth:`CliqueIndex.sample` for
    repeated draws on a fixed graph.
    """
    cliques = _cached_cliques(g, k, cap)
    if not cliques:
        return None
    return cliques[int(as_generator(rng).integers(len(cliques)))]


def y_edge(g: GraphState, k: int, e: Edge) -> int:
    """Number of k-cliques of ``g + e`` that contain both endpoints of ``e``."""
    u, v = e
    if u == v:
        raise ValueError("edge endpoints must differ")
    if k < 2:
        return 0
    common = g.rows[u] & g.rows[v]
    return _count_within(g.rows, common, k - 2)


def y_set(g: GraphState, k: int, s) -> int:
    """Number of k-cliques of ``g`` with the pairs inside the triple ``s`` forced present, containing ``s``."""
    a, b, c = s
    if len({a, b, c}) != 3:
        raise ValueError(f"triple must have distinct vertices, got {s}")
    if k < 3:
        return 0
    common = g.rows[a] & g.rows[b] & g.rows[c] & ~((1 << a) | (1 << b) | (1 << c))
    return _count_within(g.rows, common, k - 3)


def clique_edges(clique: Clique) -> list[Edge]:
    return list(itertools.combinations(clique, 2))


@dataclass(frozen=True)
class RemovalReport:
    destroyed: int
    removed_edges: tuple[Edge, ...]


class CliqueIndex:
    """All k-cliques of a graph plus an edge -> live-clique-ids inverted index.

    Removing a clique retires its edges and kills every live clique through any of
    them. Dead ids stay in the sampling pool until more than half the pool is dead,
    at which point the pool is compacted.
    """

    def __init__(self, k: int, cliques: list[Clique]) -> None:
        self.k = k
        self.cliques = cliques
        self.alive = bytearray(b"\x01") * len(cliques)
        self.edge_map: dict[Edge, set[int]] = {}
        for cid, c in enumerate(cliques):
            for e in itertools.combinations(c, 2):
                self.edge_map.setdefault(e, set()).add(cid)
        self.live_count = len(cliques)
        self._pool = list(range(len(cliques)))
        self._pool_dead = 0

    def y(self, e: Edge) -> int:
        """Y_e for a current edge ``e`` (0 for edges in no live clique)."""
        ids = self.edge_map.get(edge_key(*e))
        return len(ids) if ids else 0

    def y_sum(self) -> int:
        return sum(len(s) for s in self.edge_map.values())

    def live_ids(self) -> list[int]:
        return [cid for cid in range(len(self.cliques)) if self.alive[cid]]

    def live_cliques(self) -> list[Clique]:
        return [self.cliques[cid] for cid in self.live_ids()]

    def sample(self, rng) -> int | None:
        """Uniform live clique id, or ``None`` if no clique is live."""
        if self.live_count == 0:
            return None
        rng = as_generator(rng)
        pool = self._pool
        while True:
            cid = pool[int(rng.integers(len(pool)))]
            if self.alive[cid]:
                return cid

    def remove(self, cid: int) -> RemovalReport:
        if not 0 <= cid < len(self.cliques) or not self.alive[cid]:
            raise KeyError(f"clique id {cid} is not live")
        edges = tuple(itertools.combinations(self.cliques[cid], 2))
        destroyed = 0
        for e in edges:
            ids = self.edge_map.pop(e, None)
            if not ids:
                continue
            for other in ids:
                self.alive[other] = 0
                destroyed += 1
                for f in itertools.combinations(self.cliques[other], 2):
                    if f == e:
                        continue
                    bucket = self.edge_map.get(f)
                    if bucket is not None:
                        bucket.discard(other)
                        if not bucket:
                            del self.edge_map[f]
        self.live_count -= destroyed
        self._pool_dead += destroyed
        if 2 * self._pool_dead > len(self._pool):
            self._pool = [cid for cid in self._pool if self.alive[cid]]
            self._pool_dead = 0
        return RemovalReport(destroyed, edges)

    def check_identity(self) -> None:
        """Assert sum_e Y_e == C(k,2) * Q over current edges."""
        lhs = self.y_sum()
        rhs = comb(self.k, 2) * self.live_count
        assert lhs == rhs, f"sum of Y_e = {lhs} but C(k,2)*Q = {rhs}"


def build_clique_index(g: GraphState, k: int, cap: int = DEFAULT_INDEX_CAP) -> CliqueIndex:
    """Index every k-clique of ``g``.

    ``cap`` bounds clique-id references (``C(k,2)`` per clique) held by the edge map.
    """
    per_clique = max(comb(k, 2), 1)
    max_cliques = cap // per_clique
    try:
        cliques = list(enumerate_cliques(g, k, max_cliques))
    except CapacityError as exc:
        raise CapacityError(cap, exc.count * per_clique, "clique-id references") from None
    return CliqueIndex(k, cliques)


def index_remove_clique(index: CliqueIndex, cid: int) -> RemovalReport:
    return index.remove(cid)


def chi_square_uniform(counts: np.ndarray) -> float:
    """p-value of a chi-square goodness-of-fit test of ``counts`` against uniform."""
    from scipy.stats import chisquare

    return float(chisquare(counts).pvalue)
