import math

import numpy as np
import pytest

from etdclust import experiments
from etdclust.config import load_experiment
from etdclust.experiments import (ReplicateResult, cell_seed, figure2_config, format_table,
                                  run_experiment, run_replicate, simulate, summarize)


def test_cell_seeds_are_stable_and_distinct():
    a = cell_seed(0, "S4", "C1", 0.3, 0)
    assert a == cell_seed(0, "S4", "C1", 0.3, 0)
    assert 0 <= a < 2 ** 63
    others = {cell_seed(0, "S4", "C1", 0.3, 1), cell_seed(1, "S4", "C1", 0.3, 0),
              cell_seed(0, "S5", "C1", 0.3, 0), cell_seed(0, "S4", "C2", 0.3, 0),
              cell_seed(0, "S4", "C1", 0.6, 0), cell_seed(0, "S4", None, 0.3, 0)}
    assert a not in others and len(others) == 6


def test_figure2_layout():
    ds = simulate(figure2_config(), seed=0)
    assert len(ds.samples) == 120 and len(ds.outlier_indices) == 12
    assert sum(s.n_obs == 14 for s in ds.samples) == 96
    assert sum(s.n_obs == 20 for s in ds.samples) == 24


def test_summary_formatting():
    rs = [ReplicateResult("S4", "C1", 0.0, "rtlp", "multivariate", i, 0, ari=1.0, ari2=1.0,
                          p_c=v, p_f=0.0) for i, v in enumerate([1.0, 0.9, 1.0])]
    rs.append(ReplicateResult("S4", "C1", 0.0, "rtlp", "multivariate", 3, 0, error="boom"))
    row = summarize(rs)[0]
    sd = np.std([100, 90, 100], ddof=1)
    assert row["p_c"] == f"96.7 ({sd:.1f})"
    assert row["p_f"] == "0.0 (0.0)" and row["ari2"] == "1.000 (0.000)"
    assert row["failed"] == 1 and row["status"] == "partial"
    text = format_table([row])
    assert text.splitlines()[0].startswith("scenario") and "96.7" in text


def test_baseline_rows_have_no_outlier_rates():
    rs = [ReplicateResult("S4", None, 0.0, "kmedoids", "multivariate", 0, 0, ari=0.5, ari2=0.25,
                          p_c=math.nan, p_f=0.0)]
    row = summarize(rs)[0]
    assert row["p_c"] == "-" and row["p_f"] == "-" and row["contamination"] == "none"


SMALL = ("seed: 2\nreplicates: 2\nmode: both\nmethods: [rtlp, hier]\nsimulation:\n"
         "  scenario: S4\n  n_samples: 45\n  grid_size: 15\n  contamination: C1\n  p_size: 1.0\n"
         "  p_curves: [0.0, 0.3]\n")


def test_marginal_mode_averages_variables():
    cfg = load_experiment(SMALL)
    res = run_replicate(cfg, "S4", "C1", 0.0, 0)
    assert [(r.method, r.mode) for r in res] == [("rtlp", "multivariate"), ("rtlp", "marginal"),
                                                 ("hier", "multivariate"), ("hier", "marginal")]
    marg = res[1]
    ds = simulate(cfg.simulation, marg.seed, "S4", "C1", 0.0)
    per_var = [experiments._evaluate_once(ds, [s.select_variables([v]) for s in ds.samples],
                                          cfg.cluster, "rtlp", marg.seed) for v in range(3)]
    assert marg.ari == pytest.approx(np.mean([a for a, *_ in per_var]))
    assert marg.p_c == pytest.approx(np.mean([p for _, p, _, _ in per_var]))
    assert marg.ari2 == pytest.approx(marg.ari ** 2)


def test_workers_do_not_change_results():
    cfg = load_experiment(SMALL)
    a = run_experiment(cfg, 1, workers=1)
    b = run_experiment(cfg, 1, workers=3)
    assert [r.__dict__ for r in a] == [r.__dict__ for r in b]


def test_failed_cells_are_marked(monkeypatch):
    cfg = load_experiment(SMALL)
    real = experiments._evaluate_once

    def flaky(ds, samples, cl, method, seed):
        if method == "hier":
            raise FloatingPointError("bad")
        return real(ds, samples, cl, method, seed)
    monkeypatch.setattr(experiments, "_evaluate_once", flaky)
    rows = summarize(run_experiment(cfg, 1))
    status = {(r["method"], r["mode"], r["p_curve"]): r["status"] for r in rows}
    assert status[("hier", "marginal", "0%")] == "failed"
    assert status[("rtlp", "multivariate", "30%")] == "ok"
