"""Sparse multivariate functional data, the standard grid and alignment.

A curve is stored as its own time grid plus one p-vector per observed time.
Before distances can be taken every curve is resampled onto a common,
equidistant grid by nearest-observed-time lookup.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class DataError(ValueError):
    """Raised for malformed or inconsistent functional data."""


@dataclass(frozen=True)
class SparseSample:
    """One subject's curve observed at its own time points.

    Parameters
    ----------
    id : str
        Subject identifier.
    times : array_like, shape (T_n,)
        Strictly increasing observation times.
    values : array_like, shape (T_n, p)
        Observed p-vectors; a 1-d array is read as a univariate curve.
    """

    id: str
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).reshape(-1)
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        if times.size == 0:
            raise DataError(f"sample {self.id!r} has no observations")
        if values.ndim != 2 or values.shape[0] != times.size:
            raise DataError(
                f"sample {self.id!r}: {times.size} times but values of shape {values.shape}"
            )
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(values))):
            raise DataError(f"sample {self.id!r} contains non-finite entries")
        if np.any(np.diff(times) <= 0):
            raise DataError(f"sample {self.id!r}: times must be strictly increasing")
        times.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def n_obs(self) -> int:
        return self.times.size

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def in_unit_interval(self) -> bool:
        return bool(self.times[0] >= 0.0 and self.times[-1] <= 1.0)

    def select_variables(self, columns) -> "SparseSample":
        return SparseSample(self.id, self.times, self.values[:, columns].reshape(self.n_obs, -1))


@dataclass(frozen=True)
class StandardGrid:
    """Equidistant grid ``k / (T - 1)``, ``k = 0..T-1`` on [0, 1]."""

    T: int
    points: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.T < 2:
            raise DataError("degenerate grid: at least two grid points are required")
        points = np.arange(self.T) / (self.T - 1)
        points.setflags(write=False)
        object.__setattr__(self, "points", points)


@dataclass(frozen=True)
class AlignedSample:
    id: str
    values: np.ndarray
    source_index: np.ndarray


@dataclass(frozen=True)
class AlignedDataset:
    """All curves on a shared standard grid.

    ``values`` has shape (N, T, p) and ``source_index`` (N, T); row ``n`` of
    ``source_index`` holds the 0-based index into the n-th curve's own times
    that each grid point was read from.
    """

    grid: StandardGrid
    ids: tuple
    values: np.ndarray
    source_index: np.ndarray

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[2]

    @property
    def samples(self) -> list[AlignedSample]:
        return [
            AlignedSample(i, self.values[n], self.source_index[n])
            for n, i in enumerate(self.ids)
        ]

    def __len__(self):
        return self.N


def build_standard_grid(samples: Sequence[SparseSample]) -> StandardGrid:
    """Grid with as many points as the most densely observed sample."""
    if len(samples) == 0:
        raise DataError("empty dataset")
    T = max(s.n_obs for s in samples)
    if T < 2:
        raise DataError("degenerate grid: every sample has a single observation")
    return StandardGrid(T)


def nearest_index(times: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Index of the observed time closest to each grid point.

    Ties go to the earlier observation.
    """
    times = np.asarray(times, dtype=float)
    right = np.searchsorted(times, points, side="left")
    right = np.clip(right, 0, times.size - 1)
    left = np.clip(right - 1, 0, times.size - 1)
    take_left = np.abs(points - times[left]) <= np.abs(times[right] - points)
    return np.where(take_left, left, right).astype(np.int64)


def align(sample: SparseSample, grid: StandardGrid) -> AlignedSample:
    if not sample.in_unit_interval():
        raise DataError(
            f"sample {sample.id!r} has times outside [0, 1]; normalise the time axis first"
        )
    idx = nearest_index(sample.times, grid.points)
    return AlignedSample(sample.id, sample.values[idx], idx)


def align_dataset(samples: Sequence[SparseSample], grid: StandardGrid | None = None) -> AlignedDataset:
    """Align every sample onto ``grid`` (built from the samples by default)."""
    if grid is None:
        grid = build_standard_grid(samples)
    dims = {s.p for s in samples}
    if len(dims) != 1:
        raise DataError(f"samples have differing dimensions {sorted(dims)}")
    ids = tuple(s.id for s in samples)
    if len(set(ids)) != len(ids):
        raise DataError("duplicate sample ids")
    aligned = [align(s, grid) for s in samples]
    values = np.ascontiguousarray(np.stack([a.values for a in aligned]), dtype=float)
    source = np.stack([a.source_index for a in aligned])
    return AlignedDataset(grid, ids, values, source)


def normalize_time(sample: SparseSample) -> SparseSample:
    """Map the sample's time span affinely onto [0, 1]."""
    t0, t1 = sample.times[0], sample.times[-1]
    if not t1 > t0:
        raise DataError(f"sample {sample.id!r}: cannot normalise a single time point")
    return SparseSample(sample.id, (sample.times - t0) / (t1 - t0), sample.values)
