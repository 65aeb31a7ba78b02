"""scikit-learn style wrapper around the removal process.

``CliquePacker().fit(X)`` runs the process on the graph ``X`` (a :class:`GraphState`
or a square symmetric 0/1 adjacency matrix) and exposes the packing;
``transform`` returns the adjacency left after deleting the packing's edges.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .cliques import DEFAULT_INDEX_CAP
from .graph import GraphState, as_generator
from .process import detect_stopping_times, run_removal_process, verify_packing
from .theory import TheoryParams, find_k0


def check_graph(X) -> GraphState:
    """Coerce ``X`` into a validated :class:`GraphState`."""
    if isinstance(X, GraphState):
        return X
    a = np.asarray(X)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"adjacency must be a square matrix, got shape {a.shape}")
    if not np.isin(a, (0, 1)).all():
        raise ValueError("adjacency entries must be 0/1")
    a = a.astype(bool)
    if not (a == a.T).all():
        raise ValueError("adjacency must be symmetric")
    if a.diagonal().any():
        raise ValueError("adjacency must have an empty diagonal")
    iu, ju = np.nonzero(np.triu(a, 1))
    return GraphState.from_edges(a.shape[0], zip(iu.tolist(), ju.tolist()))


def check_probability(p, name: str = "p", *, open_interval: bool = True) -> float:
    p = float(p)
    ok = 0 < p < 1 if open_interval else 0 <= p <= 1
    if not ok:
        raise ValueError(f"{name} must lie in {'(0, 1)' if open_interval else '[0, 1]'}, got {p}")
    return p


class CliquePacker(TransformerMixin, BaseEstimator):
    """Edge-disjoint k-clique packing by uniform random clique removal.

    Parameters
    ----------
    k : int, optional
        Clique size. Exactly one of ``k`` and ``C`` must be set.
    C : int, optional
        Use ``k = k0(n, p) - C``; needs ``p``.
    p : float, optional
        Edge probability the graph was drawn with. Enables the trajectory
        schedule and stopping-time report.
    horizon : int, optional
        Maximum number of steps; ``None`` runs to exhaustion.
    random_state : int, Seed or Generator, optional
    """

    def __init__(self, k=None, C=None, p=None, horizon=None, random_state=None,
                 tracked_edges=64, cap=DEFAULT_INDEX_CAP, paranoid=False):
        self.k = k
        self.C = C
        self.p = p
        self.horizon = horizon
        self.random_state = random_state
        self.tracked_edges = tracked_edges
        self.cap = cap
        self.paranoid = paranoid

    def _resolve_k(self, n: int) -> int:
        if (self.k is None) == (self.C is None):
            raise ValueError("set exactly one of k and C")
        if self.k is not None:
            return int(self.k)
        if self.p is None:
            raise ValueError("C requires p")
        return find_k0(n, check_probability(self.p)) - int(self.C)

    def fit(self, X, y=None):
        g = check_graph(X)
        k = self._resolve_k(g.n)
        params = None
        if self.p is not None:
            check_probability(self.p)
            params = TheoryParams.from_npk(g.n, self.p, k)
        trace = run_removal_process(
            g, k, self.horizon, as_generator(self.random_state), True, params=params,
            paranoid=self.paranoid, tracked_edges=self.tracked_edges, cap=self.cap,
        )
        if params is not None:
            trace.stopping = detect_stopping_times(trace)
        self.k_ = k
        self.n_features_in_ = g.n
        self.graph_ = g
        self.trace_ = trace
        self.params_ = params
        self.packing_ = trace.packing
        self.n_cliques_ = trace.M
        self.stopping_ = trace.stopping
        self.verification_ = verify_packing(g, self.packing_, k)
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "packing_"):
            raise NotFittedError("CliquePacker is not fitted yet; call fit first")

    def transform(self, X) -> np.ndarray:
        """Adjacency of ``X`` with the fitted packing's edges removed."""
        self._check_fitted()
        g = check_graph(X)
        report = verify_packing(g, self.packing_, self.k_)
        if not report.passed:
            raise ValueError(f"fitted packing does not fit this graph: {report.reason} {report.witness}")
        a = g.adjacency_matrix()
        for c in self.packing_:
            idx = np.array(c)
            a[np.ix_(idx, idx)] = False
        return a

    def score(self, X=None, y=None) -> float:
        """Packing size normalised by the trivial bound e(G) / C(k,2)."""
        self._check_fitted()
        g = self.graph_ if X is None else check_graph(X)
        bound = g.edge_count / (self.k_ * (self.k_ - 1) / 2)
        return self.n_cliques_ / bound if bound else 0.0
