"""Distance-matrix baselines: K-medoids (PAM) and agglomerative clustering.

Both work on any precomputed distance matrix, here the ETD matrix, and pick
the number of clusters by the classical average silhouette.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .etd import DistanceMatrix
from .rtlp import Partition, _as_array, core_of, neighbour_matrix, silhouette_values

log = logging.getLogger(__name__)

LINKAGES = ("average", "single", "complete")


@dataclass(frozen=True)
class BaselineConfig:
    method: str = "kmedoids"
    k_min: int = 2
    k_max: int = 8
    linkage: str = "average"
    max_iter: int = 100
    # BUILD/SWAP is deterministic; kept so reports record the run seed
    seed: int = 0

    def __post_init__(self):
        if self.method not in ("kmedoids", "hierarchical"):
            raise ValueError(f"unknown baseline method {self.method!r}")
        if self.linkage not in LINKAGES:
            raise ValueError(f"unknown linkage {self.linkage!r}")
        if not 1 <= self.k_min <= self.k_max:
            raise ValueError("need 1 <= k_min <= k_max")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")


def _check_k(k: int, n: int):
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range for {n} points")


def _assign(D: np.ndarray, medoids: list[int]) -> np.ndarray:
    slot = np.argmin(D[:, medoids], axis=1)
    slot[medoids] = np.arange(len(medoids))
    return slot


def pam_cost(D, medoids) -> float:
    D = _as_array(D)
    slot = _assign(D, list(medoids))
    return float(D[np.arange(D.shape[0]), np.asarray(medoids)[slot]].sum())


def _build(D: np.ndarray, k: int) -> list[int]:
    n = D.shape[0]
    medoids = [int(np.argmin(D.sum(axis=1)))]
    nearest = D[:, medoids[0]].copy()
    while len(medoids) < k:
        # gain of adding candidate c: sum_j max(nearest_j - D[j, c], 0)
        gain = np.maximum(nearest[:, None] - D, 0.0).sum(axis=0)
        gain[medoids] = -np.inf
        c = int(np.argmax(gain))
        medoids.append(c)
        nearest = np.minimum(nearest, D[:, c])
    return medoids


def kmedoids(D, k: int, cfg: BaselineConfig | None = None, return_trace: bool = False):
    """Partitioning around medoids: BUILD initialisation then best-swap descent.

    Returns a :class:`Partition` whose cores are the medoids; with
    ``return_trace`` the total cost after BUILD and after every swap is
    returned as well.
    """
    cfg = cfg or BaselineConfig(method="kmedoids")
    D = _as_array(D)
    n = D.shape[0]
    _check_k(k, n)
    medoids = _build(D, k)
    rows = np.arange(n)
    trace = [pam_cost(D, medoids)]
    tol = 1e-12 * max(float(D.max()), 1.0)
    for _ in range(cfg.max_iter):
        dm = D[:, medoids]
        order = np.argsort(dm, axis=1, kind="stable")
        d1 = dm[rows, order[:, 0]]
        d2 = dm[rows, order[:, 1]] if k > 1 else np.full(n, np.inf)
        current = d1.sum()
        best = (0.0, None, None)
        for slot in range(k):
            base = np.where(order[:, 0] == slot, d2, d1)
            # column o: cost with medoid `slot` replaced by point o
            cost = np.minimum(base[:, None], D).sum(axis=0) - current
            cost[medoids] = np.inf
            o = int(np.argmin(cost))
            if cost[o] < best[0] - tol:
                best = (cost[o], slot, o)
        if best[1] is None:
            break
        medoids[best[1]] = best[2]
        trace.append(pam_cost(D, medoids))
    slot = _assign(D, medoids)
    sets = [np.flatnonzero(slot == s) for s in range(k)]
    part = Partition.build(sets, medoids)
    return (part, trace) if return_trace else part


def hierarchical(D, k: int, cfg: BaselineConfig | None = None) -> Partition:
    """Agglomerative clustering with Lance-Williams updates, cut at ``k`` clusters.

    Among equally close pairs the one with the smallest ``(i, j)`` labels is
    merged; a cluster is labelled by its smallest member.
    """
    cfg = cfg or BaselineConfig(method="hierarchical")
    D = _as_array(D)
    n = D.shape[0]
    _check_k(k, n)
    M = D.astype(float).copy()
    M[np.tril_indices(n)] = np.inf
    size = np.ones(n)
    members = {i: [i] for i in range(n)}
    active = np.ones(n, dtype=bool)
    for _ in range(n - k):
        flat = int(np.argmin(M))
        i, j = divmod(flat, n)
        # full symmetric rows of the two clusters being merged
        di = np.where(np.arange(n) < i, M[:, i], M[i, :])
        dj = np.where(np.arange(n) < j, M[:, j], M[j, :])
        if cfg.linkage == "single":
            new = np.minimum(di, dj)
        elif cfg.linkage == "complete":
            new = np.maximum(di, dj)
        else:
            new = (size[i] * di + size[j] * dj) / (size[i] + size[j])
        new[~active] = np.inf
        new[[i, j]] = np.inf
        M[:i, i] = new[:i]
        M[i, i + 1:] = new[i + 1:]
        M[j, :] = np.inf
        M[:, j] = np.inf
        active[j] = False
        size[i] += size[j]
        members[i].extend(members.pop(j))
    sets = [members[i] for i in sorted(members)]
    dm = D if isinstance(D, DistanceMatrix) else DistanceMatrix(D)
    adjacency = neighbour_matrix(dm.values, dm.quantile(0.1)) if n > 1 else np.ones((1, 1), bool)
    cores = [core_of(s, adjacency) for s in sets]
    return Partition.build(sets, cores)


def classical_silhouette(part: Partition, D) -> float:
    D = _as_array(D)
    if len(part) < 2:
        return -1.0
    return float(silhouette_values(part.labels(D.shape[0]), D).mean())


def select_k(D, cfg: BaselineConfig | None = None):
    """Best ``k`` in ``cfg.k_min..cfg.k_max`` by average silhouette (ties: smallest).

    Returns ``(k, partition, trace)`` with ``trace`` mapping k to silhouette.
    """
    cfg = cfg or BaselineConfig()
    D = _as_array(D)
    n = D.shape[0]
    run = kmedoids if cfg.method == "kmedoids" else hierarchical
    ks = [k for k in range(cfg.k_min, cfg.k_max + 1) if k <= n - 1]
    if not ks:
        raise ValueError(f"no admissible k in {cfg.k_min}..{cfg.k_max} for {n} points")
    parts, trace = {}, {}
    for k in ks:
        parts[k] = run(D, k, cfg)
        trace[k] = classical_silhouette(parts[k], D)
    vals = np.array([trace[k] for k in ks])
    if np.all(vals == vals[0]):
        log.warning("silhouette is flat over k=%s; returning the smallest k", ks)
    best = ks[int(np.argmax(vals))]
    return best, parts[best], trace
