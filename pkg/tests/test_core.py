import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from etdclust.core import (DataError, SparseSample, StandardGrid, align, align_dataset,
                           build_standard_grid, nearest_index, normalize_time)


def sample(times, values=None, id="a"):
    times = np.asarray(times, dtype=float)
    if values is None:
        values = np.arange(times.size, dtype=float)
    return SparseSample(id, times, values)


def test_grid_size_is_largest_sample():
    lengths = [11, 7, 5, 9, 6]
    samples = [sample(np.linspace(0, 1, m), id=str(i)) for i, m in enumerate(lengths)]
    grid = build_standard_grid(samples)
    assert grid.T == 11
    np.testing.assert_allclose(grid.points, np.arange(11) / 10)


def test_minimal_grid_and_formula():
    assert list(build_standard_grid([sample([0, 1])]).points) == [0.0, 1.0]
    grid = build_standard_grid([sample([0, 0.5, 1], id="a"), sample(np.linspace(0, 1, 5), id="b")])
    assert list(grid.points) == [0, 0.25, 0.5, 0.75, 1]


def test_grid_errors():
    with pytest.raises(DataError):
        build_standard_grid([])
    with pytest.raises(DataError, match="degenerate"):
        build_standard_grid([sample([0.3]), sample([0.7], id="b")])


def test_grid_is_permutation_invariant(rng):
    samples = [sample(np.sort(rng.choice(np.arange(9) / 8, size=m, replace=False)), id=str(m))
               for m in (3, 7, 5)]
    assert build_standard_grid(samples).T == build_standard_grid(samples[::-1]).T == 7


def test_align_nearest_time():
    # 0.75 is 0.2 from 0.55 and 0.25 from 1, so it takes 0.55
    s = sample([0, 0.12, 0.55, 1])
    a = align(s, StandardGrid(5))
    assert a.source_index.tolist() == [0, 1, 2, 2, 3]
    assert a.values[:, 0].tolist() == [0, 1, 2, 2, 3]


def test_align_on_grid_is_identity_and_single_point_is_constant():
    grid = StandardGrid(6)
    s = sample(grid.points, np.arange(6.0) ** 2)
    a = align(s, grid)
    assert a.source_index.tolist() == list(range(6))
    np.testing.assert_array_equal(a.values, s.values)
    one = align(sample([0.5], [7.0]), grid)
    assert one.source_index.tolist() == [0] * 6
    assert np.all(one.values == 7.0)


def test_align_tie_goes_to_earlier_time():
    # grid point 0.5 is equidistant from 0.25 and 0.75
    idx = nearest_index(np.array([0.25, 0.75]), np.array([0.0, 0.5, 1.0]))
    assert idx.tolist() == [0, 0, 1]


def test_align_rejects_times_outside_unit_interval():
    with pytest.raises(DataError):
        align(sample([0, 2]), StandardGrid(3))


def test_sample_validation():
    with pytest.raises(DataError):
        sample([0, 0.5, 0.5])
    with pytest.raises(DataError):
        sample([0.2, 0.1])
    with pytest.raises(DataError):
        SparseSample("x", [0, 1], [[1.0], [np.nan]])
    with pytest.raises(DataError):
        SparseSample("x", [0, 1], [1.0, 2.0, 3.0])


def test_dataset_checks():
    with pytest.raises(DataError):
        align_dataset([sample([0, 1]), sample([0, 1])])
    with pytest.raises(DataError):
        align_dataset([SparseSample("a", [0, 1], [[1, 2], [3, 4]]), sample([0, 1], id="b")])


def test_normalize_time():
    assert normalize_time(sample([3, 6, 9])).times.tolist() == [0, 0.5, 1]
    assert normalize_time(sample([0, 1])).times.tolist() == [0, 1]
    hours = np.arange(0, 73, 3.0)
    np.testing.assert_allclose(normalize_time(sample(hours)).times, np.arange(25) / 24)
    with pytest.raises(DataError):
        normalize_time(sample([4.0]))


def test_values_are_read_only():
    s = sample([0, 1])
    with pytest.raises(ValueError):
        s.values[0, 0] = 3


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 15), st.data())
def test_alignment_properties(T, data):
    grid = StandardGrid(T)
    m = data.draw(st.integers(1, T))
    idx = sorted(data.draw(st.sets(st.integers(0, T - 1), min_size=m, max_size=m)))
    s = sample(grid.points[idx], np.arange(m, dtype=float) * 1.5)
    a = align(s, grid)
    # monotone source indices, values copied from the sample
    assert np.all(np.diff(a.source_index) >= 0)
    assert set(a.values[:, 0]).issubset(set(s.values[:, 0]))
    # observed grid points map to themselves
    for j, k in enumerate(idx):
        assert a.source_index[k] == j
    # aligning the aligned curve again changes nothing
    again = align(SparseSample("b", grid.points, a.values), grid)
    np.testing.assert_array_equal(again.values, a.values)
