import json
import subprocess
import sys
from pathlib import Path

import pytest

from etdclust import cli, simgen
from etdclust.experiments import cell_seed
from etdclust.io import read_long_csv, read_truth

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(*argv):
    return cli.main([str(a) for a in argv])


def write(path, text):
    path.write_text(text)
    return path


def test_simulate_defaults(tmp_path):
    assert run("simulate", "--out", tmp_path / "s") == 0
    samples = read_long_csv(tmp_path / "s" / "data.csv")
    truth = read_truth(tmp_path / "s" / "truth.csv")
    assert len(samples) == 150 and list(truth.values()).count("OUTLIER") == 15


def test_simulate_dense_clean(tmp_path):
    cfg = write(tmp_path / "c.yaml", "rate: 0\np_size: 0\n")
    assert run("simulate", cfg, "--out", tmp_path / "s") == 0
    samples = read_long_csv(tmp_path / "s" / "data.csv")
    assert all(s.n_obs == 50 for s in samples)
    assert "OUTLIER" not in read_truth(tmp_path / "s" / "truth.csv").values()


def test_simulate_same_seed_same_bytes(tmp_path):
    for d in ("a", "b"):
        assert run("simulate", "--seed", 17, "--out", tmp_path / d) == 0
    for f in ("data.csv", "truth.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    run("simulate", "--seed", 18, "--out", tmp_path / "c")
    assert (tmp_path / "a" / "data.csv").read_bytes() != (tmp_path / "c" / "data.csv").read_bytes()


def test_distance_identical_curves_and_workers(tmp_path):
    data = write(tmp_path / "d.csv", "curve_id,t,v1\na,0,1\na,1,2\nb,0,1\nb,1,2\n")
    assert run("distance", data, "--out", tmp_path / "m.csv") == 0
    assert (tmp_path / "m.csv").read_text() == "a,b\n0.0,0.0\n0.0,0.0\n"
    run("simulate", "--seed", 3, "--out", tmp_path / "s")
    outs = []
    for w in (1, 8):
        assert run("distance", tmp_path / "s" / "data.csv", "--workers", w, "--out", tmp_path / f"m{w}.csv") == 0
        outs.append((tmp_path / f"m{w}.csv").read_bytes())
    assert outs[0] == outs[1]


def test_distance_errors(tmp_path):
    one = write(tmp_path / "d.csv", "curve_id,t,v1\na,0,1\na,1,2\n")
    assert run("distance", one, "--out", tmp_path / "m.csv") == 2
    bad = write(tmp_path / "e.csv", "curve_id,t,v1\na,0,1\na,0,2\n")
    assert run("distance", bad, "--out", tmp_path / "m.csv") == 2
    assert run("distance", tmp_path / "missing.csv", "--out", tmp_path / "m.csv") == 2


def test_cluster_hier_fixed_k_on_clean_s1(tmp_path):
    cfg = write(tmp_path / "s1.yaml", "scenario: S1\np: 2\ncontamination: none\nsigns: [0, 0, 0]\n")
    run("simulate", cfg, "--seed", 1, "--out", tmp_path / "s")
    code = run("cluster", tmp_path / "s" / "data.csv", "--method", "hier", "--k", 3,
               "--truth", tmp_path / "s" / "truth.csv", "--out", tmp_path / "r")
    assert code == 0
    report = json.loads((tmp_path / "r" / "report.json").read_text())
    assert report["selected"] == 3 and report["metrics"]["ari"] == 1.0
    assert (tmp_path / "r" / "silhouette.csv").read_text().startswith("k,silhouette\n3,")


def test_cluster_rtlp_report(tmp_path):
    run("simulate", CONFIGS / "figure2.yaml", "--seed", 7, "--out", tmp_path / "s")
    code = run("cluster", tmp_path / "s" / "data.csv", "--truth", tmp_path / "s" / "truth.csv",
               "--out", tmp_path / "r")
    assert code == 0
    report = json.loads((tmp_path / "r" / "report.json").read_text())
    assert 0.05 <= report["selected"] <= 0.15
    assert len(report["cluster_sizes"]) == 4 and len(report["outliers"]) == 12
    assert report["metrics"]["p_c"] == 1.0 and report["metrics"]["p_f"] == 0.0
    series = (tmp_path / "r" / "silhouette.csv").read_text().splitlines()
    assert series[0] == "theta,silhouette" and len(series) == 31
    labels = read_truth(tmp_path / "r" / "labels.csv")
    assert list(labels.values()).count("OUTLIER") == 12
    assert "distance" in json.loads((tmp_path / "r" / "timings.json").read_text())


def test_cluster_normalize_time(tmp_path):
    rows = ["curve_id,t,v1"]
    for c, level in (("a", 0), ("b", 0.1), ("c", 10), ("d", 10.1)):
        rows += [f"{c},{h},{level + h / 72}" for h in range(0, 73, 3)]
    data = write(tmp_path / "h.csv", "\n".join(rows) + "\n")
    assert run("cluster", data, "--method", "kmedoids", "--k", 2, "--out", tmp_path / "r") == 2
    assert run("cluster", data, "--method", "kmedoids", "--k", 2, "--normalize-time",
               "--out", tmp_path / "r") == 0
    report = json.loads((tmp_path / "r" / "report.json").read_text())
    assert sorted(map(sorted, report["clusters"])) == [["a", "b"], ["c", "d"]]


def test_cluster_usage_and_truth_errors(tmp_path):
    run("simulate", "--seed", 2, "--out", tmp_path / "s")
    data = tmp_path / "s" / "data.csv"
    assert run("cluster", data, "--k", 3, "--out", tmp_path / "r") == 1
    truth = write(tmp_path / "t.csv", "curve_id,label\nzzz,1\n")
    assert run("cluster", data, "--truth", truth, "--out", tmp_path / "r") == 2
    bad = write(tmp_path / "c.yaml", "rtlp:\n  alpha: 2\n")
    assert run("cluster", data, "--config", bad, "--out", tmp_path / "r") == 1


def test_usage_errors_exit_one(capsys):
    with pytest.raises(SystemExit) as exc:
        run("cluster")
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        run("frobnicate")
    assert exc.value.code == 1
    assert run("distance", "x.csv", "--out", "y.csv", "--workers", 0) == 1


def test_numerical_failure_exit_three(tmp_path, monkeypatch):
    def broken(cov):
        raise simgen.FactorizationError("not positive definite")
    monkeypatch.setattr(simgen, "noise_factor", broken)
    assert run("simulate", "--out", tmp_path / "s") == 3


def test_experiment_single_replicate_matches_cluster(tmp_path):
    text = ("seed: 5\nreplicates: 1\nsimulation:\n  scenario: S4\n  n_samples: 60\n  grid_size: 20\n"
            "  contamination: C1\n  p_size: 1.0\n  p_curve: 0.3\n")
    cfg = write(tmp_path / "e.yaml", text)
    assert run("experiment", cfg, "--out", tmp_path / "e") == 0
    rows = (tmp_path / "e" / "replicates.csv").read_text().splitlines()
    header, first = rows[0].split(","), rows[1].split(",")
    rec = dict(zip(header, first))
    seed = cell_seed(5, "S4", "C1", 0.3, 0)
    assert int(rec["seed"]) == seed

    sim = write(tmp_path / "s.yaml", "scenario: S4\nn_samples: 60\ngrid_size: 20\ncontamination: C1\n"
                                     "p_size: 1.0\np_curve: 0.3\n")
    run("simulate", sim, "--seed", seed, "--out", tmp_path / "s")
    run("cluster", tmp_path / "s" / "data.csv", "--truth", tmp_path / "s" / "truth.csv",
        "--out", tmp_path / "r")
    report = json.loads((tmp_path / "r" / "report.json").read_text())
    assert float(rec["ari"]) == report["metrics"]["ari"]
    assert float(rec["p_c"]) == report["metrics"]["p_c"]
    assert float(rec["p_f"]) == report["metrics"]["p_f"]
    assert float(rec["selected"]) == report["selected"]
    table = (tmp_path / "e" / "table.csv").read_text()
    assert "S4,C1,30%,rtlp,multivariate,1,0," in table


def test_console_script_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "etdclust.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "simulate" in out.stdout
