"""Estimator-style wrappers around the three pipelines.

Each estimator takes a :class:`WeightedGraph` or an ``(m, 4)`` integer array
of ``u, v, w, is_tree`` rows (pass ``n`` when isolated vertices matter),
runs the simulated algorithm in ``fit`` and exposes per-edge arrays in
input edge order.
"""
from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils import check_array
from sklearn.utils.validation import check_is_fitted

from .graph import GraphFormatError, WeightedGraph, check_graph
from .lca import all_edges_lca
from .pipeline import RunOptions
from .sensitivity import analyze_sensitivity
from .verification import verify


def check_edge_input(X, n: int | None = None) -> WeightedGraph:
    """Validate ``X`` and return it as a :class:`WeightedGraph`."""
    if isinstance(X, WeightedGraph):
        return check_graph(X)
    arr = check_array(X, dtype=np.int64, ensure_2d=True, ensure_min_samples=0)
    if arr.shape[1] != 4:
        raise GraphFormatError(f"expected 4 columns (u, v, w, is_tree), got {arr.shape[1]}")
    if np.any((arr[:, 3] != 0) & (arr[:, 3] != 1)):
        raise GraphFormatError("is_tree column must be 0 or 1")
    if n is None:
        n = int(arr[:, :2].max()) + 1 if len(arr) else 1
    g = WeightedGraph(n, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3].astype(bool),
                      W=int(max(arr[:, 2].max(), 1)) if len(arr) else 1)
    return check_graph(g)


class _PipelineEstimator(BaseEstimator):
    def __init__(self, delta=0.5, kappa=4.0, c_g=8.0, sort_round_cost=1, seed=0, D_hat=None):
        self.delta = delta
        self.kappa = kappa
        self.c_g = c_g
        self.sort_round_cost = sort_round_cost
        self.seed = seed
        self.D_hat = D_hat

    def _options(self) -> RunOptions:
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.kappa <= 0 or self.c_g <= 0:
            raise ValueError("kappa and c_g must be positive")
        return RunOptions(delta=self.delta, kappa=self.kappa, c_g=self.c_g,
                          sort_round_cost=self.sort_round_cost, seed=self.seed)


class MSTVerifier(_PipelineEstimator):
    """Decide whether the flagged edges form a minimum spanning tree.

    After ``fit``: ``verdict_``, ``witness_`` (``(non-tree id, tree id)`` or
    None), ``pathmax_`` (per edge; -1 on tree edges) and ``stats_``.
    """

    def fit(self, X, y=None, n=None):
        g = check_edge_input(X, n)
        res = verify(g, D_hat=self.D_hat, options=self._options())
        self.verdict_ = res.verdict
        self.witness_ = res.witness
        self.reason_ = res.reason
        pm = np.full(g.m, -1, dtype=np.int64)
        for e, x in res.pathmax.items():
            pm[e] = x
        self.pathmax_ = pm
        self.stats_ = res.stats
        return self

    def predict(self, X, n=None):
        """Per edge: False for a non-tree edge lighter than its tree path maximum."""
        check_is_fitted(self, "pathmax_")
        g = check_edge_input(X, n)
        if g.m != len(self.pathmax_):
            raise ValueError("X has a different number of edges than the fitted graph")
        chord = self.pathmax_ >= 0
        ok = np.ones(g.m, dtype=bool)
        ok[chord] = g.w[chord] >= self.pathmax_[chord]
        return ok


class MSTSensitivityAnalyzer(TransformerMixin, _PipelineEstimator):
    """Sensitivity of every edge of a graph whose flagged edges form an MST.

    After ``fit``: ``sens_`` (float per edge, ``inf`` on bridges), ``mc_``
    (float per edge, NaN on non-tree edges), ``note_peak_`` and ``stats_``.
    """

    def fit(self, X, y=None, n=None):
        g = check_edge_input(X, n)
        res = analyze_sensitivity(g, D_hat=self.D_hat, options=self._options())
        self.sens_ = np.array([float(res.sens[e]) for e in range(g.m)])
        mc = np.full(g.m, np.nan)
        for e, c in res.mc.mc.items():
            mc[e] = math.inf if c == math.inf else float(c)
        self.mc_ = mc
        self.note_peak_ = res.note_peak
        self.stats_ = res.stats
        return self

    def transform(self, X, n=None):
        check_is_fitted(self, "sens_")
        g = check_edge_input(X, n)
        if g.m != len(self.sens_):
            raise ValueError("X has a different number of edges than the fitted graph")
        return self.sens_.copy()


class AllEdgesLCA(TransformerMixin, _PipelineEstimator):
    """LCA of the endpoints of every non-tree edge (``-1`` for tree edges)."""

    def fit(self, X, y=None, n=None):
        g = check_edge_input(X, n)
        res = all_edges_lca(g, D_hat=self.D_hat, options=self._options())
        lca = np.full(g.m, -1, dtype=np.int64)
        for e, x in res.lca.items():
            lca[e] = x
        self.lca_ = lca
        self.stats_ = res.stats
        return self

    def transform(self, X, n=None):
        check_is_fitted(self, "lca_")
        g = check_edge_input(X, n)
        if g.m != len(self.lca_):
            raise ValueError("X has a different number of edges than the fitted graph")
        return self.lca_.copy()
