"""Simulation study orchestration: replicated runs and Table-style summaries.

A cell is one (scenario, contamination, p_curve, method, mode) combination.
Each replicate of a cell gets its own seed hashed from the master seed, the
scenario, contamination, p_curve and replicate index, so any cell can be
rerun on its own and methods within a replicate see the same data.
"""
from __future__ import annotations

import hashlib
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import baselines, core, etd, metrics, rtlp, simgen
from .config import ClusterConfig, ExperimentConfig, SimConfig

log = logging.getLogger(__name__)


def cell_seed(master: int, scenario: str, contamination, p_curve: float, replicate: int) -> int:
    """Deterministic 63-bit seed for one replicate of one cell."""
    key = f"{int(master)}|{scenario}|{contamination or 'none'}|{float(p_curve)!r}|{int(replicate)}"
    digest = hashlib.blake2b(key.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


def simulate(sim: SimConfig, seed: int | None = None, scenario: str | None = None,
             contamination="keep", p_curve: float | None = None) -> simgen.LabeledDataset:
    """Generate the dataset described by ``sim``, optionally overriding parts of it."""
    spec = sim.scenario
    spec = replace(spec, seed=spec.seed if seed is None else int(seed), id=scenario or spec.id)
    cont = sim.contamination
    if contamination != "keep":
        cont = simgen.ContaminationSpec(contamination, cont.rate)
    sparsity = sim.sparsity if p_curve is None else simgen.SparsitySpec(sim.sparsity.p_size, p_curve)
    signs = sim.signs if spec.id in ("S1", "S2", "S3") else None
    return simgen.generate(spec, cont, sparsity, matern=sim.matern(spec.seed), signs=signs)


def figure2_config(**overrides) -> SimConfig:
    """Two-variable illustration: 120 curves, 4 clusters, 12 shape outliers, T = 20.

    Cluster means follow the S1 family with every offset on the same side,
    so consecutive clusters sit at equal spacing; 96 curves lose 6 of their
    20 grid points.
    """
    spec = simgen.ScenarioSpec("S1", n_clusters=4, n_samples=120, grid_size=20, p=2)
    cfg = SimConfig(spec, simgen.ContaminationSpec("C6", 0.10), simgen.SparsitySpec(0.8, 0.3),
                    signs=(0, 0, 0, 0))
    return replace(cfg, **overrides)


def predicted_labels(n: int, part, outliers=()) -> list[str]:
    lab = part.labels(n)
    out = [str(k + 1) for k in lab]
    for i in outliers:
        out[i] = metrics.OUTLIER
    return out


def run_method(D: etd.DistanceMatrix, cl: ClusterConfig, method: str, seed: int = 0, workers: int = 1):
    """Cluster a distance matrix; returns ``(labels, outliers, selected, series, result)``."""
    n = D.n
    if method == "rtlp":
        res = rtlp.cluster(D, cl.rtlp, workers=workers)
        series = sorted(res.silhouette_trace.items())
        return (predicted_labels(n, res.primary_clusters, res.outliers), list(res.outliers),
                res.theta_star, series, res)
    bcfg = replace(cl, method=method).baseline_config(seed)
    if cl.k is not None:
        part = (baselines.kmedoids if method == "kmedoids" else baselines.hierarchical)(D, cl.k, bcfg)
        series = [(cl.k, baselines.classical_silhouette(part, D))]
        k = cl.k
    else:
        k, part, trace = baselines.select_k(D, bcfg)
        series = sorted(trace.items())
    return predicted_labels(n, part), [], k, series, part


@dataclass
class ReplicateResult:
    scenario: str
    contamination: str | None
    p_curve: float
    method: str
    mode: str
    replicate: int
    seed: int
    ari: float = math.nan
    ari2: float = math.nan
    p_c: float = math.nan
    p_f: float = math.nan
    selected: float = math.nan
    error: str = ""


def _evaluate_once(ds, samples, cl, method, seed):
    D = etd.distance_matrix(core.align_dataset(samples))
    labels, outliers, selected, _, _ = run_method(D, cl, method, seed)
    ev = metrics.evaluate(ds.labels, labels)
    p_c = math.nan if ev.p_c is None else ev.p_c
    return ev.ari, p_c, ev.p_f, float(selected)


def run_replicate(cfg: ExperimentConfig, scenario, contamination, p_curve, replicate,
                  methods=None, modes=None) -> list[ReplicateResult]:
    """All method/mode combinations on one simulated dataset."""
    seed = cell_seed(cfg.seed, scenario, contamination, p_curve, replicate)
    methods = methods or cfg.methods
    modes = modes or (("multivariate", "marginal") if cfg.mode == "both" else (cfg.mode,))
    out = []
    try:
        ds = simulate(cfg.simulation, seed, scenario, contamination, p_curve)
    except (ValueError, ArithmeticError, simgen.FactorizationError) as exc:
        return [ReplicateResult(scenario, contamination, p_curve, m, mode, replicate, seed,
                                error=f"{type(exc).__name__}: {exc}")
                for m in methods for mode in modes]
    for method in methods:
        for mode in modes:
            r = ReplicateResult(scenario, contamination, p_curve, method, mode, replicate, seed)
            try:
                if mode == "multivariate":
                    r.ari, r.p_c, r.p_f, r.selected = _evaluate_once(ds, ds.samples, cfg.cluster, method, seed)
                    r.ari2 = r.ari ** 2
                else:
                    per_var = [
                        _evaluate_once(ds, [s.select_variables([v]) for s in ds.samples],
                                       cfg.cluster, method, seed)
                        for v in range(ds.samples[0].p)
                    ]
                    a = np.array(per_var, dtype=float)
                    r.ari = float(a[:, 0].mean())
                    r.ari2 = r.ari ** 2
                    r.p_c = float(a[:, 1].mean()) if not np.isnan(a[:, 1]).all() else math.nan
                    r.p_f = float(a[:, 2].mean())
                    r.selected = math.nan
            except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
                log.warning("replicate %d of %s/%s/%s failed: %s", replicate, scenario,
                            contamination, method, exc)
                r.error = f"{type(exc).__name__}: {exc}"
            out.append(r)
    return out


def run_experiment(cfg: ExperimentConfig, replicates: int | None = None, workers: int = 1):
    """Run every cell; results come back in cell enumeration order."""
    R = replicates or cfg.replicates
    jobs = [(s, c, pc, rep) for s in cfg.scenarios for c in cfg.contaminations
            for pc in cfg.p_curves for rep in range(R)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(lambda j: run_replicate(cfg, *j), jobs))
    else:
        batches = [run_replicate(cfg, *j) for j in jobs]
    return [r for b in batches for r in b]


def _mean_sd(values, scale=1.0, digits=1):
    v = np.asarray([x for x in values if not math.isnan(x)], dtype=float) * scale
    if v.size == 0:
        return "-"
    sd = v.std(ddof=1) if v.size > 1 else 0.0
    return f"{v.mean():.{digits}f} ({sd:.{digits}f})"


def summarize(results) -> list[dict]:
    """Mean (sd) per cell: ARI^2 to three decimals, p_c and p_f in percent."""
    cells: dict[tuple, list] = {}
    for r in results:
        cells.setdefault((r.scenario, r.contamination, r.p_curve, r.method, r.mode), []).append(r)
    rows = []
    for (s, c, pc, m, mode), rs in cells.items():
        ok = [r for r in rs if not r.error]
        rows.append({
            "scenario": s,
            "contamination": c or "none",
            "p_curve": f"{100 * pc:.0f}%",
            "method": m,
            "mode": mode,
            "replicates": len(rs),
            "failed": len(rs) - len(ok),
            "ari2": _mean_sd([r.ari2 for r in ok], digits=3),
            "p_c": _mean_sd([r.p_c for r in ok], 100.0) if m == "rtlp" else "-",
            "p_f": _mean_sd([r.p_f for r in ok], 100.0) if m == "rtlp" else "-",
            "status": "ok" if len(ok) == len(rs) else ("failed" if not ok else "partial"),
        })
    return rows


def format_table(rows) -> str:
    """Fixed-width text table of :func:`summarize` rows."""
    if not rows:
        return ""
    cols = list(rows[0])
    widths = {c: max(len(c), *(len(str(r[c])) for r in rows)) for c in cols}
    lines = ["  ".join(c.ljust(widths[c]) for c in cols)]
    lines.append("  ".join("-" * widths[c] for c in cols))
    for r in rows:
        lines.append("  ".join(str(r[c]).ljust(widths[c]) for c in cols))
    return "\n".join(line.rstrip() for line in lines) + "\n"
