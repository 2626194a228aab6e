"""Adjusted Rand index and outlier detection rates."""
from __future__ import annotations

import logging
from dataclasses import dataclass, asdict

import numpy as np

log = logging.getLogger(__name__)

OUTLIER = "OUTLIER"


def _comb2(x):
    x = np.asarray(x, dtype=float)
    return x * (x - 1) / 2


def contingency(labels_a, labels_b) -> np.ndarray:
    a = np.asarray([str(v) for v in labels_a])
    b = np.asarray([str(v) for v in labels_b])
    if a.shape != b.shape:
        raise ValueError("label sequences differ in length")
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)
    return table


def ari(labels_a, labels_b) -> float:
    """Hubert-Arabie adjusted Rand index.

    Labels are compared by their string form, so an ``"OUTLIER"`` label (or
    ``-1``) is just another class. When the chance-corrected denominator
    vanishes the index is 1 for equal partitions and 0 otherwise.
    """
    if len(labels_a) < 2:
        raise ValueError("ARI needs at least two items")
    table = contingency(labels_a, labels_b)
    n = table.sum()
    index = _comb2(table).sum()
    sum_a = _comb2(table.sum(axis=1)).sum()
    sum_b = _comb2(table.sum(axis=0)).sum()
    expected = sum_a * sum_b / _comb2(n)
    denom = 0.5 * (sum_a + sum_b) - expected
    if denom == 0:
        same = sum_a == sum_b == index
        log.info("ARI denominator is zero; partitions are trivial")
        return 1.0 if same else 0.0
    return float((index - expected) / denom)


def outlier_rates(true_outliers, detected, n: int):
    """Return ``(p_c, p_f)``; ``p_c`` is None when there are no true outliers."""
    true_set, det_set = set(true_outliers), set(detected)
    n_false = len(det_set - true_set)
    p_c = len(true_set & det_set) / len(true_set) if true_set else None
    n_clean = n - len(true_set)
    p_f = n_false / n_clean if n_clean > 0 else 0.0
    return p_c, p_f


@dataclass
class EvalReport:
    ari: float
    p_c: float | None
    p_f: float
    n_true_outliers: int
    n_detected: int
    n_correct: int
    n_false: int

    def as_dict(self):
        out = asdict(self)
        out["ari2"] = self.ari ** 2
        return out


def evaluate(true_labels, predicted_labels, true_outliers=None, detected=None) -> EvalReport:
    """Compare a clustering against ground truth.

    ``true_labels``/``predicted_labels`` may contain ``OUTLIER``; outlier index
    sets default to the positions carrying that label.
    """
    true_labels = [str(v) for v in true_labels]
    predicted_labels = [str(v) for v in predicted_labels]
    if true_outliers is None:
        true_outliers = [i for i, v in enumerate(true_labels) if v == OUTLIER]
    if detected is None:
        detected = [i for i, v in enumerate(predicted_labels) if v == OUTLIER]
    n = len(true_labels)
    p_c, p_f = outlier_rates(true_outliers, detected, n)
    correct = len(set(true_outliers) & set(detected))
    return EvalReport(
        ari=ari(true_labels, predicted_labels),
        p_c=p_c,
        p_f=p_f,
        n_true_outliers=len(set(true_outliers)),
        n_detected=len(set(detected)),
        n_correct=correct,
        n_false=len(set(detected)) - correct,
    )
