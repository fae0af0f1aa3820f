"""Centrality measures on binarized directed graphs (no self-loops).

All four measures work in the "out" direction: edge ``i -> j`` is ``adj[i, j]``.
Shortest paths are unweighted hop counts. BFS and the Brandes dependency
accumulation are vectorized over all sources at once, so one graph costs
``O(n^3 * diameter)`` array work rather than Python-level loops.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Sequence

import numpy as np

MEASURES = ("out_degree", "out_closeness", "out_closeness_norm", "betweenness", "eigencentrality")
# the four headline measures reported in result tables
HEADLINE = ("out_degree", "out_closeness_norm", "betweenness", "eigencentrality")


@dataclass(frozen=True)
class DirectedGraph:
    adj: np.ndarray

    def __post_init__(self):
        a = np.array(self.adj, dtype=bool)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {a.shape}")
        np.fill_diagonal(a, False)
        object.__setattr__(self, "adj", a)

    @property
    def n(self) -> int:
        return self.adj.shape[0]


@dataclass(frozen=True)
class CentralityScores:
    out_degree: np.ndarray
    out_closeness: np.ndarray
    out_closeness_norm: np.ndarray
    betweenness: np.ndarray
    eigencentrality: np.ndarray
    eigen_converged: bool = True

    def as_dict(self) -> dict[str, np.ndarray]:
        return {m: getattr(self, m) for m in MEASURES}


@dataclass(frozen=True)
class EigenResult:
    scores: np.ndarray
    eigenvalue: float
    converged: bool
    iterations: int


def binarize(B, threshold: float) -> DirectedGraph:
    """Edge ``i -> j`` iff ``B[i, j] > threshold`` and ``i != j``."""
    if not np.isfinite(threshold):
        raise ValueError("threshold must be finite")
    return DirectedGraph(np.asarray(B) > threshold)


def two_mode_threshold(values) -> float:
    """Midpoint between the two centroids of a 1-D two-means split of ``values``.

    Used as a data-driven binarization threshold for continuous estimates.
    The split is exact: every cut of the sorted values is scored.
    """
    v = np.sort(np.asarray(values, dtype=float).ravel())
    if v.size < 2 or v[0] == v[-1]:
        return float(v[0]) if v.size else 0.0
    c = np.cumsum(v)
    c2 = np.cumsum(v * v)
    k = np.arange(1, v.size)
    left = c2[:-1] - c[:-1] ** 2 / k
    right = (c2[-1] - c2[:-1]) - (c[-1] - c[:-1]) ** 2 / (v.size - k)
    cut = int(np.argmin(left + right)) + 1
    return 0.5 * (v[:cut].mean() + v[cut:].mean())


def out_degree(G: DirectedGraph) -> np.ndarray:
    return G.adj.sum(axis=1).astype(int)


def bfs_distances_and_counts(G: DirectedGraph) -> tuple[np.ndarray, np.ndarray]:
    """All-sources BFS.

    Returns ``(D, S)`` where ``D[i, j]`` is the hop distance (``-1`` when
    unreachable, ``0`` on the diagonal) and ``S[i, j]`` the number of shortest
    ``i -> j`` paths (``1`` on the diagonal, ``0`` when unreachable).
    """
    n = G.n
    A = G.adj.astype(float)
    D = np.full((n, n), -1, dtype=int)
    np.fill_diagonal(D, 0)
    S = np.eye(n)
    frontier = np.eye(n)
    k = 0
    while frontier.any():
        k += 1
        nxt = frontier @ A
        nxt[D >= 0] = 0.0
        hit = nxt > 0
        D[hit] = k
        S[hit] = nxt[hit]
        frontier = nxt
    return D, S


def out_closeness(G: DirectedGraph) -> tuple[np.ndarray, np.ndarray]:
    """Raw and normalized out-closeness.

    Unreachable targets are left out of the distance sum; a node reaching
    nothing scores 0. The normalized score multiplies by ``R_i / (n - 1)``.
    """
    n = G.n
    D, _ = bfs_distances_and_counts(G)
    reach = D > 0
    total = np.where(reach, D, 0).sum(axis=1)
    R = reach.sum(axis=1)
    raw = np.zeros(n)
    ok = total > 0
    raw[ok] = 1.0 / total[ok]
    norm = raw * R / (n - 1) if n > 1 else np.zeros(n)
    return raw, norm


def betweenness(G: DirectedGraph) -> np.ndarray:
    """Shortest-path betweenness normalized by ``(n-1)(n-2)``; zeros when ``n < 3``."""
    n = G.n
    if n < 3:
        return np.zeros(n)
    A = G.adj.astype(float)
    D, S = bfs_distances_and_counts(G)
    delta = np.zeros((n, n))  # delta[s, v]: dependency of source s on v
    dmax = D.max()
    with np.errstate(divide="ignore", invalid="ignore"):
        for k in range(dmax - 1, 0, -1):
            X = np.where(D == k + 1, (1.0 + delta) / S, 0.0)
            contrib = X @ A.T  # contrib[s, v] = sum_w X[s, w] * A[v, w]
            level = D == k
            delta[level] = S[level] * contrib[level]
    return delta.sum(axis=0) / ((n - 1) * (n - 2))


def eigencentrality(G: DirectedGraph, tol: float = 1e-10, max_iter: int = 10_000) -> EigenResult:
    """Power iteration ``x <- A x`` from the uniform vector, L1-normalized each step.

    A nilpotent adjacency (e.g. any DAG) yields the zero vector with
    ``converged=False``; so does exhausting ``max_iter``.
    """
    n = G.n
    A = G.adj.astype(float)
    x = np.full(n, 1.0 / n)
    lam = 0.0
    for it in range(1, max_iter + 1):
        y = np.abs(A @ x)
        lam = y.sum()  # ||A x||_1 with ||x||_1 = 1
        if lam == 0.0:
            return EigenResult(np.zeros(n), 0.0, False, it)
        y /= lam
        if np.abs(y - x).sum() < tol:
            return EigenResult(y, float(lam), True, it)
        x = y
    return EigenResult(x, float(lam), False, max_iter)


def centrality_scores(G: DirectedGraph) -> CentralityScores:
    raw, norm = out_closeness(G)
    eig = eigencentrality(G)
    return CentralityScores(
        out_degree=out_degree(G).astype(float),
        out_closeness=raw,
        out_closeness_norm=norm,
        betweenness=betweenness(G),
        eigencentrality=eig.scores,
        eigen_converged=eig.converged,
    )


def average_centrality(items: Sequence[DirectedGraph | CentralityScores]) -> CentralityScores:
    """Arithmetic mean of per-graph centrality vectors."""
    if len(items) == 0:
        raise ValueError("average_centrality needs at least one graph")
    scores = [s if isinstance(s, CentralityScores) else centrality_scores(s) for s in items]
    n = {len(s.out_degree) for s in scores}
    if len(n) != 1:
        raise ValueError(f"graphs have differing node counts {sorted(n)}")
    kw = {f.name: np.mean([getattr(s, f.name) for s in scores], axis=0) for f in fields(CentralityScores)
          if f.name != "eigen_converged"}
    return CentralityScores(**kw, eigen_converged=all(s.eigen_converged for s in scores))


def mean_absolute_error(estimate: CentralityScores, truth: CentralityScores) -> dict[str, float]:
    return {m: float(np.mean(np.abs(getattr(estimate, m) - getattr(truth, m)))) for m in MEASURES}
