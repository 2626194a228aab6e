"""``etdclust`` command line: simulate, distance, cluster, experiment.

Exit codes: 0 success, 1 usage or config error, 2 data error, 3 numerical
failure. Artifacts depend only on inputs, seed and config; ``--workers``
changes wall time only. Wall-clock timings go to a separate
``timings.json`` so artifact files stay byte-identical between reruns.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import core, etd, experiments, io, metrics, simgen
from .config import ConfigError, load_cluster, load_experiment, load_sim, read_config

log = logging.getLogger("etdclust")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=None, help="master seed (non-negative integer)")
    p.add_argument("--workers", type=int, default=1, help="worker threads; never changes output")
    p.add_argument("--normalize-time", action="store_true",
                   help="rescale each curve's time span onto [0, 1] when reading data")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="etdclust", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", parents=[common], help="generate a labelled dataset")
    p.add_argument("config", nargs="?", help="simulation YAML (defaults if omitted)")
    p.add_argument("--out", required=True, help="output directory (data.csv, truth.csv)")

    p = sub.add_parser("distance", parents=[common], help="pairwise distance matrix")
    p.add_argument("data", help="long CSV")
    p.add_argument("--out", required=True, help="output CSV")

    p = sub.add_parser("cluster", parents=[common], help="cluster a dataset")
    p.add_argument("data", help="long CSV")
    p.add_argument("--method", choices=("rtlp", "kmedoids", "hier"), default=None)
    p.add_argument("--config", help="cluster YAML")
    p.add_argument("--k", type=int, default=None, help="fixed number of clusters (baselines)")
    p.add_argument("--truth", help="curve_id,label CSV; adds ARI, p_c and p_f to the report")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("experiment", parents=[common], help="replicated simulation study")
    p.add_argument("config", help="experiment YAML")
    p.add_argument("--replicates", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")
    return parser


def _check_args(args):
    if args.workers < 1:
        raise UsageError("--workers must be at least 1")
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        raise UsageError("--seed must be an unsigned 64-bit integer")
    if getattr(args, "replicates", None) is not None and args.replicates < 1:
        raise UsageError("--replicates must be at least 1")
    if getattr(args, "k", None) is not None and args.k < 1:
        raise UsageError("--k must be at least 1")


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_timings(path: Path, timings: dict):
    path.write_text(json.dumps({k: round(v, 6) for k, v in timings.items()}, indent=2) + "\n")


# --------------------------------------------------------------------------
# commands

def cmd_simulate(args) -> int:
    sim = read_config(args.config, load_sim)
    if args.seed is not None:
        sim = replace(sim, scenario=replace(sim.scenario, seed=args.seed))
    ds = experiments.simulate(sim)
    out = _outdir(args.out)
    io.write_long_csv(ds.samples, out / "data.csv")
    io.write_truth([s.id for s in ds.samples], ds.labels, out / "truth.csv")
    log.info("wrote %d curves (%d outliers) to %s", len(ds.samples), len(ds.outlier_indices), out)
    return EXIT_OK


def _load_distances(args):
    samples = io.read_long_csv(args.data, normalize=args.normalize_time)
    if len(samples) < 2:
        raise core.DataError("at least two curves are needed")
    aligned = core.align_dataset(samples)
    return samples, etd.distance_matrix(aligned, workers=args.workers)


def cmd_distance(args) -> int:
    t0 = time.perf_counter()
    _, D = _load_distances(args)
    D.to_csv(args.out)
    log.info("distance matrix %dx%d in %.3fs", D.n, D.n, time.perf_counter() - t0)
    return EXIT_OK


def cmd_cluster(args) -> int:
    cl = read_config(args.config, load_cluster)
    if args.method:
        cl = replace(cl, method=args.method)
    if args.k is not None:
        if cl.method == "rtlp":
            raise UsageError("--k applies to kmedoids and hier only")
        cl = replace(cl, k=args.k)
    truth = io.read_truth(args.truth) if args.truth else None

    timings = {}
    t0 = time.perf_counter()
    samples, D = _load_distances(args)
    timings["distance"] = time.perf_counter() - t0
    ids = [s.id for s in samples]
    if truth is not None and set(truth) != set(ids):
        missing = sorted(set(ids) - set(truth))[:5]
        extra = sorted(set(truth) - set(ids))[:5]
        raise core.DataError(f"truth ids do not match data ids (missing {missing}, unknown {extra})")

    t0 = time.perf_counter()
    labels, outliers, selected, series, res = experiments.run_method(
        D, cl, cl.method, seed=args.seed or 0, workers=args.workers)
    timings["cluster"] = time.perf_counter() - t0

    if cl.method == "rtlp":
        part, threshold = res.primary_clusters, res.threshold
    else:
        part, threshold = res, None
    report = io.RunReport(
        method=cl.method,
        selected=selected,
        n_curves=len(ids),
        cluster_sizes=part.sizes,
        centers=[ids[c] for c in part.cores],
        clusters=[[ids[i] for i in s] for s in part.sets],
        outliers=[ids[i] for i in outliers],
        series=[[x, s] for x, s in series],
        threshold=threshold,
    )
    if truth is not None:
        ev = metrics.evaluate([truth[i] for i in ids], labels)
        report.metrics = ev.as_dict()

    out = _outdir(args.out)
    report.to_json(out / "report.json")
    key = "theta" if cl.method == "rtlp" else "k"
    io.write_series_csv([key, "silhouette"], series, out / "silhouette.csv")
    io.write_truth(ids, labels, out / "labels.csv")
    _write_timings(out / "timings.json", timings)
    log.info("%s: selected %s=%s, %d clusters, %d outliers", cl.method, key, selected,
             len(part), len(outliers))
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = read_config(args.config, load_experiment)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    t0 = time.perf_counter()
    results = experiments.run_experiment(cfg, args.replicates, workers=args.workers)
    rows = experiments.summarize(results)
    out = _outdir(args.out)

    with open(out / "replicates.csv", "w", encoding="utf-8", newline="") as fh:
        fields = list(asdict(results[0]))
        w = csv.DictWriter(fh, fields, lineterminator="\n")
        w.writeheader()
        for r in results:
            row = asdict(r)
            row["contamination"] = row["contamination"] or "none"
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    with open(out / "table.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    (out / "table.txt").write_text(experiments.format_table(rows), encoding="utf-8")
    _write_timings(out / "timings.json", {"total": time.perf_counter() - t0})
    sys.stdout.write(experiments.format_table(rows))
    return EXIT_OK if all(r["status"] != "failed" for r in rows) else EXIT_NUMERIC


COMMANDS = {
    "simulate": cmd_simulate,
    "distance": cmd_distance,
    "cluster": cmd_cluster,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _check_args(args)
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"etdclust: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (core.DataError, OSError, UnicodeDecodeError) as exc:
        print(f"etdclust: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (simgen.FactorizationError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"etdclust: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
