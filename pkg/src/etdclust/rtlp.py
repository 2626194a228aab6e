"""Robust two-layer partition (RTLP) clustering.

Pipeline for one neighbourhood level ``theta``:

1. threshold = ``theta``-quantile of the off-diagonal distances;
2. first layer: repeatedly peel off the curve with the most neighbours in
   the remaining set, together with those neighbours;
3. second layer: seed a cluster with the largest unmerged group and absorb
   every later group whose core neighbours any seed member;
4. recognition: clusters larger than ``N * p_min`` are primary, members of
   the rest are either reassigned to a primary cluster or declared outliers.

:func:`cluster` runs this over a grid of ``theta`` and keeps the level with
the best average silhouette (outliers score 0).

Indices are 0-based throughout.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .etd import DistanceMatrix, quantile
from . import kernels

log = logging.getLogger(__name__)

DEFAULT_THETAS = tuple(k / 100 for k in range(1, 31))


@dataclass(frozen=True)
class RtlpConfig:
    theta_grid: tuple = DEFAULT_THETAS
    p_min: float = 0.05
    alpha: float = 0.87

    def __post_init__(self):
        grid = tuple(float(t) for t in self.theta_grid)
        if not grid:
            raise ValueError("theta_grid is empty")
        if list(grid) != sorted(grid):
            raise ValueError("theta_grid must be sorted ascending")
        if grid[0] < 0.01 - 1e-12 or grid[-1] > 0.3 + 1e-12:
            raise ValueError("theta_grid must lie within [0.01, 0.3]")
        if not 0.0 < self.p_min <= 0.5:
            raise ValueError("p_min must be in (0, 0.5]")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        object.__setattr__(self, "theta_grid", grid)


@dataclass(frozen=True)
class Partition:
    """Disjoint index sets ordered by non-increasing size, one core per set."""

    sets: tuple
    cores: tuple

    @classmethod
    def build(cls, sets, cores, sort=True) -> "Partition":
        pairs = [(tuple(sorted(int(i) for i in s)), int(c)) for s, c in zip(sets, cores)]
        if sort:
            # stable: equal sizes keep their creation order
            pairs.sort(key=lambda sc: -len(sc[0]))
        return cls(tuple(s for s, _ in pairs), tuple(c for _, c in pairs))

    def __len__(self):
        return len(self.sets)

    @property
    def sizes(self) -> list[int]:
        return [len(s) for s in self.sets]

    def labels(self, n: int, fill: int = -1) -> np.ndarray:
        out = np.full(n, fill, dtype=np.int64)
        for k, s in enumerate(self.sets):
            out[list(s)] = k
        return out


@dataclass(frozen=True)
class ClusteringResult:
    primary_clusters: Partition
    outliers: tuple
    first_layer: Partition
    second_layer: Partition
    theta_star: float
    threshold: float
    silhouette_trace: dict = field(default_factory=dict)

    def labels(self, n: int | None = None) -> np.ndarray:
        """Cluster index per curve, ``-1`` for outliers."""
        if n is None:
            n = sum(self.primary_clusters.sizes) + len(self.outliers)
        return self.primary_clusters.labels(n)


def _as_array(D) -> np.ndarray:
    return D.values if isinstance(D, DistanceMatrix) else np.asarray(D, dtype=float)


def neighbour_matrix(D, threshold: float) -> np.ndarray:
    """Boolean adjacency ``D < threshold``.

    Zero-distance pairs are always neighbours so that a point is its own
    neighbour and indistinguishable curves stay together even when the
    threshold itself is 0.
    """
    D = _as_array(D)
    return (D < threshold) | (D == 0.0)


def neighbours(i: int, subset, D, threshold: float) -> list[int]:
    D = _as_array(D)
    subset = np.asarray(sorted(subset), dtype=np.int64)
    row = D[i, subset]
    return subset[(row < threshold) | (row == 0.0)].tolist()


def core_of(members, adjacency: np.ndarray) -> int:
    """Member with the most neighbours inside ``members``; smallest index on ties."""
    members = np.asarray(sorted(members), dtype=np.int64)
    counts = adjacency[np.ix_(members, members)].sum(axis=1)
    return int(members[np.argmax(counts)])


def first_layer(D, threshold: float, adjacency: np.ndarray | None = None) -> Partition:
    if adjacency is None:
        adjacency = neighbour_matrix(D, threshold)
    group_of, cores = kernels.first_layer_groups(np.ascontiguousarray(adjacency, dtype=np.uint8))
    group_of = np.asarray(group_of)
    sets = [np.flatnonzero(group_of == g) for g in range(len(cores))]
    # peeling already yields non-increasing sizes
    return Partition.build(sets, cores, sort=False)


def second_layer(G: Partition, D, threshold: float, adjacency: np.ndarray | None = None) -> Partition:
    """Merge first-layer groups into clusters.

    The neighbourhood of a seed group is computed once, before any merge, and
    is not extended by members of absorbed groups.
    """
    if adjacency is None:
        adjacency = neighbour_matrix(D, threshold)
    remaining = list(range(len(G)))
    clusters = []
    while remaining:
        seed, rest = remaining[0], remaining[1:]
        members = list(G.sets[seed])
        nbr_s = adjacency[members].any(axis=0)
        kept = []
        for g in rest:
            if nbr_s[G.cores[g]]:
                members.extend(G.sets[g])
            else:
                kept.append(g)
        clusters.append(members)
        remaining = kept
    cores = [core_of(c, adjacency) for c in clusters]
    return Partition.build(clusters, cores)


def recognize(C: Partition, D, p_min: float, alpha: float):
    """Split clusters into primary clusters and outliers.

    Returns ``(primary, outliers)``. Cores and reference distance sets of the
    primary clusters are fixed before any reassignment, so the outcome does
    not depend on the order in which potential outliers are visited.
    """
    D = _as_array(D)
    n = D.shape[0]
    min_size = n * p_min
    primary = [(list(s), c) for s, c in zip(C.sets, C.cores) if len(s) > min_size]
    candidates = sorted(i for s in C.sets if len(s) <= min_size for i in s)
    if not primary:
        log.warning("no cluster exceeds N * p_min = %.3g; every curve is an outlier", min_size)
        return Partition((), ()), tuple(range(n))

    refs = [np.sort(D[s, c]) for s, c in primary]
    limits = [quantile(r, alpha) for r in refs]
    outliers = []
    additions = [[] for _ in primary]
    for x in candidates:
        d_core = [D[x, c] for _, c in primary]
        if all(d > q for d, q in zip(d_core, limits)):
            outliers.append(x)
            continue
        # empirical CDF of each cluster's core distances at d(x, core)
        cdf = [np.searchsorted(r, d, side="right") / r.size for r, d in zip(refs, d_core)]
        additions[int(np.argmin(cdf))].append(x)
    sets = [s + extra for (s, _), extra in zip(primary, additions)]
    cores = [c for _, c in primary]
    return Partition.build(sets, cores), tuple(outliers)


def silhouette_values(labels: np.ndarray, D) -> np.ndarray:
    """Per-point silhouette; label ``-1`` marks outliers, which score 0.

    Members of singleton clusters also score 0. Needs two or more clusters,
    or none at all (every point an outlier).
    """
    D = _as_array(D)
    labels = np.asarray(labels)
    ks = np.unique(labels[labels >= 0])
    if ks.size == 0:
        return np.zeros(labels.size)
    if ks.size < 2:
        raise ValueError("silhouette needs at least two clusters")
    onehot = (labels[:, None] == ks[None, :]).astype(float)
    sizes = onehot.sum(axis=0)
    sums = D @ onehot
    s = np.zeros(labels.size)
    inside = labels >= 0
    pos = np.searchsorted(ks, labels[inside])
    idx = np.flatnonzero(inside)
    own_size = sizes[pos]
    a = np.where(own_size > 1, sums[idx, pos] / np.maximum(own_size - 1, 1), 0.0)
    mean_other = sums[idx] / sizes
    mean_other[np.arange(idx.size), pos] = np.inf
    b = mean_other.min(axis=1)
    denom = np.maximum(a, b)
    with np.errstate(invalid="ignore", divide="ignore"):
        vals = np.where(denom > 0, (b - a) / denom, 0.0)
    vals[own_size <= 1] = 0.0
    s[idx] = vals
    return s


def silhouette_average(primary: Partition, outliers, D) -> float:
    """Mean silhouette over all N curves; -1 when fewer than two primary clusters."""
    D = _as_array(D)
    n = D.shape[0]
    if len(primary) < 2:
        return -1.0
    labels = primary.labels(n)
    labels[list(outliers)] = -1
    return float(silhouette_values(labels, D).mean())


def run_theta(D, theta: float, cfg: RtlpConfig) -> ClusteringResult:
    """Full single-level pipeline at neighbourhood level ``theta``."""
    dm = D if isinstance(D, DistanceMatrix) else DistanceMatrix(D)
    threshold = dm.quantile(theta)
    adjacency = neighbour_matrix(dm.values, threshold)
    G = first_layer(dm.values, threshold, adjacency)
    C = second_layer(G, dm.values, threshold, adjacency)
    primary, outliers = recognize(C, dm.values, cfg.p_min, cfg.alpha)
    s_bar = silhouette_average(primary, outliers, dm.values)
    return ClusteringResult(primary, outliers, G, C, theta, threshold, {theta: s_bar})


def cluster(D, cfg: RtlpConfig | None = None, workers: int = 1) -> ClusteringResult:
    """Select ``theta`` by maximal average silhouette and return that run.

    Ties go to the smallest ``theta``. ``workers`` only changes wall time.
    """
    cfg = cfg or RtlpConfig()
    dm = D if isinstance(D, DistanceMatrix) else DistanceMatrix(D)
    if dm.n < 2:
        raise ValueError("at least two curves are required")
    thetas = cfg.theta_grid
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(lambda t: run_theta(dm, t, cfg), thetas))
    else:
        runs = [run_theta(dm, t, cfg) for t in thetas]
    trace = {t: r.silhouette_trace[t] for t, r in zip(thetas, runs)}
    best = max(range(len(runs)), key=lambda i: (trace[thetas[i]], -i))
    r = runs[best]
    return ClusteringResult(
        r.primary_clusters, r.outliers, r.first_layer, r.second_layer,
        r.theta_star, r.threshold, trace,
    )
