"""Elastic time distance (ETD) between aligned curves.

The distance between two aligned curves is the largest Euclidean distance
between their p-vectors over the grid points. It is a semimetric: two curves
with different raw time grids can sit at distance zero.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels
from .core import AlignedDataset, AlignedSample, DataError


def etd(a: AlignedSample | np.ndarray, b: AlignedSample | np.ndarray) -> float:
    """Distance between two aligned curves given as samples or (T, p) arrays."""
    x = np.asarray(getattr(a, "values", a), dtype=float)
    y = np.asarray(getattr(b, "values", b), dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if y.ndim == 1:
        y = y[:, None]
    if x.shape != y.shape:
        raise ValueError(f"curves on different grids or dimensions: {x.shape} vs {y.shape}")
    diff = x - y
    acc = diff[:, 0] * diff[:, 0]
    for d in range(1, diff.shape[1]):
        acc = acc + diff[:, d] * diff[:, d]
    return float(np.sqrt(acc.max()))


def quantile(values, theta: float) -> float:
    """Linear-interpolation quantile on order statistics.

    With ``m`` sorted entries and ``h = (m - 1) * theta``, returns
    ``x[floor(h)] + (h - floor(h)) * (x[ceil(h)] - x[floor(h)])``
    (0-based). ``theta`` must lie strictly inside (0, 1).
    """
    if not 0.0 < theta < 1.0:
        raise ValueError(f"quantile level must be in (0, 1), got {theta}")
    x = np.sort(np.asarray(values, dtype=float).ravel())
    if x.size == 0:
        raise ValueError("quantile of an empty set")
    h = (x.size - 1) * theta
    lo = math.floor(h)
    hi = min(lo + 1, x.size - 1)
    return float(x[lo] + (h - lo) * (x[hi] - x[lo]))


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Symmetric matrix of pairwise distances, zero on the diagonal."""

    values: np.ndarray
    ids: tuple = ()

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValueError("distance matrix must be square")
        ids = tuple(self.ids) if self.ids else tuple(str(i) for i in range(values.shape[0]))
        if len(ids) != values.shape[0]:
            raise ValueError("ids do not match matrix size")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "ids", ids)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    @cached_property
    def distance_set(self) -> np.ndarray:
        """Sorted upper-triangle entries, diagonal excluded."""
        iu = np.triu_indices(self.n, k=1)
        return np.sort(self.values[iu])

    def quantile(self, theta: float) -> float:
        return quantile(self.distance_set, theta)

    def to_csv(self, path_or_buf=None) -> str | None:
        """Header of ids, then one row per curve; floats printed with ``repr``."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.ids)
        for row in self.values:
            writer.writerow([repr(float(v)) for v in row])
        text = buf.getvalue()
        if path_or_buf is None:
            return text
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return None

    @classmethod
    def from_csv(cls, path_or_buf) -> "DistanceMatrix":
        if hasattr(path_or_buf, "read"):
            text = path_or_buf.read()
        else:
            with open(path_or_buf, encoding="utf-8", newline="") as fh:
                text = fh.read()
        rows = list(csv.reader(io.StringIO(text)))
        rows = [r for r in rows if r]
        if not rows:
            raise DataError("empty distance matrix file")
        ids = tuple(rows[0])
        try:
            values = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
        except ValueError as exc:
            raise DataError(f"distance matrix: {exc}") from None
        if values.shape != (len(ids), len(ids)):
            raise DataError(
                f"distance matrix has {values.shape} entries for {len(ids)} ids"
            )
        return cls(values, ids)


def _row_blocks(n: int, n_blocks: int) -> list[tuple[int, int]]:
    """Split rows 0..n-1 into contiguous blocks holding similar pair counts."""
    n_blocks = max(1, min(n_blocks, n))
    # row i owns n-1-i pairs; cut the cumulative pair count evenly
    pairs = np.cumsum(np.arange(n - 1, -1, -1))
    total = pairs[-1] if n else 0
    cuts = [0]
    for b in range(1, n_blocks):
        cuts.append(int(np.searchsorted(pairs, total * b / n_blocks)) + 1)
    cuts.append(n)
    cuts = sorted(set(min(max(c, 0), n) for c in cuts))
    return [(a, b) for a, b in zip(cuts[:-1], cuts[1:]) if b > a]


def distance_matrix(data: AlignedDataset | np.ndarray, workers: int = 1, backend=None) -> DistanceMatrix:
    """All pairwise ETDs.

    Rows are split into contiguous blocks handled by a thread pool. Each block
    writes a disjoint set of entries, so the result does not depend on
    ``workers``.
    """
    if isinstance(data, AlignedDataset):
        values, ids = data.values, data.ids
    else:
        values, ids = np.asarray(data, dtype=float), ()
        if values.ndim == 2:
            values = values[:, :, None]
    values = np.ascontiguousarray(values, dtype=float)
    n = values.shape[0]
    if n < 2:
        raise DataError("at least two curves are needed for a distance matrix")
    kern = backend or kernels.backend
    out = np.zeros((n, n), dtype=float)
    blocks = _row_blocks(n, 4 * workers if workers > 1 else 1)
    if workers <= 1:
        for start, stop in blocks:
            kern.etd_rows(values, out, start, stop)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda blk: kern.etd_rows(values, out, *blk), blocks))
    return DistanceMatrix(out, ids)
