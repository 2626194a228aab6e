import itertools
import logging

import numpy as np
import pytest
from scipy.cluster.hierarchy import cut_tree, linkage
from scipy.spatial.distance import squareform

from etdclust.baselines import (BaselineConfig, classical_silhouette, hierarchical, kmedoids,
                                pam_cost, select_k)


def line_distances(xs):
    xs = np.asarray(xs, dtype=float)
    return np.abs(xs[:, None] - xs[None, :])


def as_sets(part):
    return {frozenset(s) for s in part.sets}


def exhaustive_medoids(D, k):
    best = min(itertools.combinations(range(len(D)), k), key=lambda m: D[:, list(m)].min(axis=1).sum())
    return D[:, list(best)].min(axis=1).sum()


def test_two_pairs():
    D = line_distances([0, 1, 10, 12])
    part = kmedoids(D, 2)
    assert as_sets(part) == {frozenset({0, 1}), frozenset({2, 3})}
    assert pam_cost(D, part.cores) == 3.0 == exhaustive_medoids(D, 2)
    for c, s in zip(part.cores, part.sets):
        assert c in s


def test_k_equals_n_and_duplicates():
    D = line_distances([0, 3, 7, 8])
    part = kmedoids(D, 4)
    assert part.sizes == [1, 1, 1, 1] and pam_cost(D, part.cores) == 0
    D = line_distances([5, 5, 5, 9, 9])
    part = kmedoids(D, 2)
    assert as_sets(part) == {frozenset({0, 1, 2}), frozenset({3, 4})}
    assert pam_cost(D, part.cores) == 0


@pytest.mark.parametrize("seed", range(12))
def test_pam_against_exhaustive_search(seed):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(10, 2))
    D = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
    k = 2 + seed % 3
    part, trace = kmedoids(D, k, return_trace=True)
    opt = exhaustive_medoids(D, k)
    # BUILD+SWAP is a local search: never better than the optimum, usually equal
    assert trace[-1] >= opt - 1e-12
    assert trace[-1] <= 1.1 * opt
    assert all(b <= a + 1e-12 for a, b in zip(trace, trace[1:]))
    assert sorted(i for s in part.sets for i in s) == list(range(10))


def test_k_out_of_range():
    D = line_distances([0, 1, 2])
    with pytest.raises(ValueError):
        kmedoids(D, 4)
    with pytest.raises(ValueError):
        hierarchical(D, 0)


def test_hierarchical_extremes():
    D = line_distances([0, 1, 10, 11])
    assert hierarchical(D, 4).sizes == [1, 1, 1, 1]
    assert hierarchical(D, 1).sets == ((0, 1, 2, 3),)
    for link in ("average", "single", "complete"):
        part = hierarchical(D, 2, BaselineConfig(method="hierarchical", linkage=link))
        assert as_sets(part) == {frozenset({0, 1}), frozenset({2, 3})}


def test_single_linkage_chain():
    D = line_distances([0, 1, 2.1, 10])
    cfg = BaselineConfig(method="hierarchical", linkage="single")
    assert as_sets(hierarchical(D, 3, cfg)) == {frozenset({0, 1}), frozenset({2}), frozenset({3})}
    assert as_sets(hierarchical(D, 2, cfg)) == {frozenset({0, 1, 2}), frozenset({3})}


def test_hierarchical_tie_break_smallest_pair():
    # all pairwise distances equal: (0, 1) merges first, then the cluster labelled 0 absorbs 2
    D = np.ones((4, 4)) - np.eye(4)
    assert as_sets(hierarchical(D, 3)) == {frozenset({0, 1}), frozenset({2}), frozenset({3})}


@pytest.mark.parametrize("link", ["average", "single", "complete"])
@pytest.mark.parametrize("seed", range(6))
def test_hierarchical_matches_scipy(link, seed):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(18, 3))
    D = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
    Z = linkage(squareform(D, checks=False), method=link)
    cfg = BaselineConfig(method="hierarchical", linkage=link)
    for k in (2, 3, 5, 9):
        ref = cut_tree(Z, n_clusters=k).ravel()
        expected = {frozenset(np.flatnonzero(ref == c).tolist()) for c in np.unique(ref)}
        assert as_sets(hierarchical(D, k, cfg)) == expected


def test_separated_groups_recovered_by_all():
    rng = np.random.default_rng(7)
    xs = np.concatenate([rng.uniform(0, 1, 6), rng.uniform(10, 11, 5), rng.uniform(20, 21, 4)])
    D = line_distances(xs)
    truth = {frozenset(range(6)), frozenset(range(6, 11)), frozenset(range(11, 15))}
    assert as_sets(kmedoids(D, 3)) == truth
    for link in ("average", "single", "complete"):
        assert as_sets(hierarchical(D, 3, BaselineConfig(method="hierarchical", linkage=link))) == truth


def test_select_k_finds_three_groups():
    rng = np.random.default_rng(1)
    xs = np.concatenate([rng.normal(c, 0.2, 8) for c in (0, 10, 20)])
    D = line_distances(xs)
    for method in ("kmedoids", "hierarchical"):
        k, part, trace = select_k(D, BaselineConfig(method=method))
        assert k == 3 and sorted(trace) == list(range(2, 9))
        assert trace[3] == classical_silhouette(part, D)


def test_select_k_two_duplicated_points():
    D = line_distances([0, 0, 0, 5, 5, 5])
    k, part, _ = select_k(D, BaselineConfig(k_max=4))
    assert k == 2 and as_sets(part) == {frozenset({0, 1, 2}), frozenset({3, 4, 5})}


def test_select_k_constant_data(caplog):
    D = np.zeros((6, 6))
    with caplog.at_level(logging.WARNING):
        k, _, _ = select_k(D, BaselineConfig(method="hierarchical", k_max=4))
    assert k == 2
    assert "flat" in caplog.text


def test_config_validation():
    with pytest.raises(ValueError):
        BaselineConfig(method="kmeans")
    with pytest.raises(ValueError):
        BaselineConfig(linkage="ward")
    with pytest.raises(ValueError):
        BaselineConfig(k_min=5, k_max=3)
