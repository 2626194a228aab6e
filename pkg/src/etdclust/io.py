"""File formats: long CSV curves, truth labels and JSON run reports.

Long CSV has the header ``curve_id,t,v1,...,vp`` and one row per observed
time point. Rows of one curve need not be contiguous; curves keep the order
in which their id first appears. Floats are written with ``repr`` so a
write/read round trip is exact.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import DataError, SparseSample, normalize_time


def _read_text(path_or_buf) -> str:
    if hasattr(path_or_buf, "read"):
        return path_or_buf.read()
    with open(path_or_buf, encoding="utf-8", newline="") as fh:
        return fh.read()


def _write_text(text: str, path_or_buf):
    if path_or_buf is None:
        return text
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(text)
    else:
        with open(path_or_buf, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return None


def _fmt(x: float) -> str:
    return repr(float(x))


def _parse_float(text: str, where: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"{where}: not a number: {text!r}") from None
    if not math.isfinite(value):
        raise DataError(f"{where}: non-finite value {text!r}")
    return value


def read_long_csv(path_or_buf, normalize: bool = False) -> list[SparseSample]:
    """Parse long-format curves.

    Parameters
    ----------
    path_or_buf : str, path or file-like
    normalize : bool
        Rescale each curve's times affinely onto [0, 1]. Without it, times
        outside [0, 1] are a :class:`DataError`.
    """
    rows = list(csv.reader(io.StringIO(_read_text(path_or_buf))))
    rows = [r for r in rows if any(c.strip() for c in r)]
    if not rows:
        raise DataError("empty data file")
    header = [h.strip() for h in rows[0]]
    p = len(header) - 2
    expected = ["curve_id", "t"] + [f"v{d}" for d in range(1, p + 1)]
    if p < 1 or header != expected:
        raise DataError(f"line 1: header must be 'curve_id,t,v1,...,vp', got {','.join(header)!r}")

    times: dict[str, list[float]] = {}
    values: dict[str, list[list[float]]] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != p + 2:
            raise DataError(f"line {lineno}: expected {p + 2} fields, got {len(row)}")
        cid = row[0].strip()
        if not cid:
            raise DataError(f"line {lineno}: empty curve_id")
        t = _parse_float(row[1], f"line {lineno}")
        vec = [_parse_float(c, f"line {lineno}") for c in row[2:]]
        times.setdefault(cid, []).append(t)
        values.setdefault(cid, []).append(vec)

    samples = []
    for cid, ts in times.items():
        ts = np.asarray(ts)
        order = np.argsort(ts, kind="stable")
        ts = ts[order]
        if np.any(np.diff(ts) == 0):
            raise DataError(f"curve {cid!r}: repeated time point")
        sample = SparseSample(cid, ts, np.asarray(values[cid])[order])
        if normalize:
            sample = normalize_time(sample)
        elif not sample.in_unit_interval():
            raise DataError(f"curve {cid!r}: times outside [0, 1]; use --normalize-time")
        samples.append(sample)
    return samples


def write_long_csv(samples, path_or_buf=None) -> str | None:
    samples = list(samples)
    if not samples:
        raise DataError("no curves to write")
    p = samples[0].p
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["curve_id", "t"] + [f"v{d}" for d in range(1, p + 1)])
    for s in samples:
        for t, vec in zip(s.times, s.values):
            w.writerow([s.id, _fmt(t)] + [_fmt(v) for v in vec])
    return _write_text(buf.getvalue(), path_or_buf)


def read_truth(path_or_buf) -> dict[str, str]:
    """``curve_id,label`` file as an ordered mapping."""
    rows = [r for r in csv.reader(io.StringIO(_read_text(path_or_buf))) if r]
    if not rows or [c.strip() for c in rows[0]] != ["curve_id", "label"]:
        raise DataError("line 1: truth header must be 'curve_id,label'")
    out = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise DataError(f"line {lineno}: expected 2 fields")
        cid, label = row[0].strip(), row[1].strip()
        if cid in out:
            raise DataError(f"line {lineno}: duplicate curve_id {cid!r}")
        out[cid] = label
    return out


def write_truth(ids, labels, path_or_buf=None) -> str | None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["curve_id", "label"])
    for cid, lab in zip(ids, labels):
        w.writerow([cid, lab])
    return _write_text(buf.getvalue(), path_or_buf)


def write_series_csv(header, rows, path_or_buf=None) -> str | None:
    """Two-column numeric series, e.g. silhouette against theta or k."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) if isinstance(x, float) else x for x in row])
    return _write_text(buf.getvalue(), path_or_buf)


@dataclass
class RunReport:
    """Outcome of one clustering run.

    ``selected`` holds the chosen theta (rtlp) or k (baselines); ``series``
    maps each candidate value to its average silhouette. Timings are kept
    apart from the artifact so that reruns produce identical files.
    """

    method: str
    selected: float | int
    n_curves: int
    cluster_sizes: list
    centers: list
    clusters: list
    outliers: list
    series: list
    threshold: float | None = None
    metrics: dict | None = None
    timings: dict = field(default_factory=dict)

    def to_dict(self, with_timings: bool = False) -> dict:
        out = asdict(self)
        if not with_timings:
            out.pop("timings")
        return out

    def to_json(self, path_or_buf=None, with_timings: bool = False) -> str | None:
        # json writes floats with repr, so parsing gives back the same values
        text = json.dumps(self.to_dict(with_timings), indent=2, sort_keys=True) + "\n"
        return _write_text(text, path_or_buf)

    @classmethod
    def from_json(cls, path_or_buf) -> "RunReport":
        data = json.loads(_read_text(path_or_buf))
        data["series"] = [list(p) for p in data["series"]]
        return cls(**data)
