"""YAML configuration files for the command line tools.

Every section is checked against a small schema. Errors name the offending
key and the line it sits on. See ``configs/`` for complete examples with
all defaults spelled out.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import yaml

from .baselines import BaselineConfig
from .rtlp import DEFAULT_THETAS, RtlpConfig
from .simgen import (CONTAMINATIONS, DEFAULT_SIGMA2, SCENARIOS, ContaminationSpec,
                     MaternParams, ScenarioSpec, SparsitySpec, default_matern)

METHODS = ("rtlp", "kmedoids", "hier")
MODES = ("multivariate", "marginal", "both")


class ConfigError(ValueError):
    """Schema violation in a config file; the message carries the line number."""


class _Doc:
    """Parsed YAML plus the line of every mapping key, for error messages."""

    def __init__(self, text: str, name: str = "<config>"):
        self.name = name
        self.lines: dict[tuple, int] = {}
        try:
            node = yaml.compose(text, Loader=yaml.SafeLoader)
            self.data = yaml.safe_load(text) if node is not None else {}
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            where = f"line {mark.line + 1}" if mark else "?"
            raise ConfigError(f"{name}: {where}: invalid YAML: {getattr(exc, 'problem', exc)}") from None
        if node is not None:
            self._index(node, ())
        if self.data is None:
            self.data = {}
        if not isinstance(self.data, dict):
            raise ConfigError(f"{name}: line 1: top level must be a mapping")

    def _index(self, node, path):
        if isinstance(node, yaml.MappingNode):
            for key, value in node.value:
                sub = path + (key.value,)
                self.lines[sub] = key.start_mark.line + 1
                self._index(value, sub)

    def fail(self, path, msg):
        line = None
        p = tuple(path)
        while p and line is None:
            line = self.lines.get(p)
            p = p[:-1]
        where = f"line {line}" if line else "line 1"
        key = ".".join(str(k) for k in path) or "<root>"
        raise ConfigError(f"{self.name}: {where}: {key}: {msg}")


def _section(doc: _Doc, data, path, allowed):
    if data is None:
        return {}
    if not isinstance(data, dict):
        doc.fail(path, "expected a mapping")
    for key in data:
        if key not in allowed:
            doc.fail(path + (key,), f"unknown key (allowed: {', '.join(sorted(allowed))})")
    return data


def _int(doc, data, path, default, lo=None):
    key = path[-1]
    v = data.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int):
        doc.fail(path, f"expected an integer, got {v!r}")
    if lo is not None and v < lo:
        doc.fail(path, f"must be >= {lo}")
    return v


def _float(doc, data, path, default, lo=None, hi=None):
    key = path[-1]
    v = data.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        doc.fail(path, f"expected a number, got {v!r}")
    v = float(v)
    if (lo is not None and v < lo) or (hi is not None and v > hi):
        doc.fail(path, f"{v} outside [{lo}, {hi}]")
    return v


def _choice(doc, data, path, default, choices):
    v = data.get(path[-1], default)
    if v not in choices:
        doc.fail(path, f"expected one of {', '.join(map(str, choices))}, got {v!r}")
    return v


def _float_list(doc, data, path, default):
    v = data.get(path[-1], default)
    if not isinstance(v, (list, tuple)) or not v:
        doc.fail(path, "expected a non-empty list of numbers")
    for x in v:
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            doc.fail(path, f"expected numbers, got {x!r}")
    return [float(x) for x in v]


def _build(doc, path, factory, **kwargs):
    try:
        return factory(**kwargs)
    except ValueError as exc:
        doc.fail(path, str(exc))


# --------------------------------------------------------------------------
# sections

@dataclass
class SimConfig:
    scenario: ScenarioSpec
    contamination: ContaminationSpec
    sparsity: SparsitySpec
    sigma2: tuple | None = None
    nu_range: tuple = (0.2, 0.3)
    eta: float = 1.0
    signs: tuple | None = None

    def matern(self, seed: int | None = None) -> MaternParams:
        seed = self.scenario.seed if seed is None else seed
        return default_matern(self.scenario.p, seed, self.sigma2, self.nu_range, self.eta)


SIM_KEYS = {"scenario", "n_clusters", "n_samples", "grid_size", "p", "seed", "signs",
            "contamination", "rate", "p_size", "p_curve", "matern"}


def _sim(doc: _Doc, data, path=()) -> SimConfig:
    data = _section(doc, data, path, SIM_KEYS | ({"scenarios", "contaminations", "p_curves"} if path else set()))
    # in an experiment the first listed scenario/contamination stands in
    first = lambda key, d: data[key][0] if path and isinstance(data.get(key), list) and data[key] else d
    sid = _choice(doc, data, path + ("scenario",), first("scenarios", "S4"), SCENARIOS)
    seed = _int(doc, data, path + ("seed",), 0, lo=0)
    spec = _build(doc, path + ("scenario",), ScenarioSpec,
                  id=sid,
                  n_clusters=_int(doc, data, path + ("n_clusters",), 3, lo=1),
                  n_samples=_int(doc, data, path + ("n_samples",), 150, lo=2),
                  grid_size=_int(doc, data, path + ("grid_size",), 50, lo=3),
                  p=_int(doc, data, path + ("p",), 3, lo=1),
                  seed=seed)
    cid = _choice(doc, data, path + ("contamination",), first("contaminations", "C1"),
                  CONTAMINATIONS + ("none", None))
    cont = _build(doc, path + ("rate",), ContaminationSpec,
                  id=None if cid in ("none", None) else cid,
                  rate=_float(doc, data, path + ("rate",), 0.10, 0.0, 0.4999999))
    sparsity = _build(doc, path + ("p_curve",), SparsitySpec,
                      p_size=_float(doc, data, path + ("p_size",), 0.0, 0.0, 1.0),
                      p_curve=_float(doc, data, path + ("p_curve",), 0.0, 0.0, 0.9999999))
    signs = data.get("signs")
    if signs is not None:
        if (not isinstance(signs, list) or len(signs) != spec.n_clusters
                or any(s not in (0, 1) or isinstance(s, bool) for s in signs)):
            doc.fail(path + ("signs",), f"expected a list of {spec.n_clusters} entries, each 0 or 1")
        if sid not in ("S1", "S2", "S3"):
            doc.fail(path + ("signs",), "only used by scenarios S1-S3")
        signs = tuple(signs)
    mpath = path + ("matern",)
    m = _section(doc, data.get("matern"), mpath, {"sigma2", "nu_range", "eta"})
    sigma2 = None
    if "sigma2" in m:
        sigma2 = tuple(_float_list(doc, m, mpath + ("sigma2",), None))
        if len(sigma2) != spec.p or min(sigma2) <= 0:
            doc.fail(mpath + ("sigma2",), f"need {spec.p} positive variances")
    nu_range = tuple(_float_list(doc, m, mpath + ("nu_range",), [0.2, 0.3]))
    if len(nu_range) != 2 or not 0 < nu_range[0] <= nu_range[1]:
        doc.fail(mpath + ("nu_range",), "expected [low, high] with 0 < low <= high")
    eta = _float(doc, m, mpath + ("eta",), 1.0, lo=1e-12)
    return SimConfig(spec, cont, sparsity, sigma2, nu_range, eta, signs)


def _theta_grid(doc, data, path):
    v = data.get(path[-1])
    if v is None:
        return DEFAULT_THETAS
    if isinstance(v, dict):
        r = _section(doc, v, path, {"start", "stop", "step"})
        start = _float(doc, r, path + ("start",), 0.01)
        stop = _float(doc, r, path + ("stop",), 0.30)
        step = _float(doc, r, path + ("step",), 0.01, lo=1e-6)
        n = int(round((stop - start) / step)) + 1
        grid = tuple(round(start + i * step, 10) for i in range(n))
    else:
        grid = tuple(_float_list(doc, data, path, None))
    if list(grid) != sorted(grid) or grid[0] < 0.01 - 1e-12 or grid[-1] > 0.3 + 1e-12:
        doc.fail(path, "must be ascending within [0.01, 0.3]")
    return grid


def _rtlp(doc, data, path=("rtlp",)) -> RtlpConfig:
    data = _section(doc, data, path, {"theta_grid", "p_min", "alpha"})
    return _build(doc, path, RtlpConfig,
                  theta_grid=_theta_grid(doc, data, path + ("theta_grid",)),
                  p_min=_float(doc, data, path + ("p_min",), 0.05, 1e-12, 0.5),
                  alpha=_float(doc, data, path + ("alpha",), 0.87, 1e-12, 1 - 1e-12))


def _baseline(doc, data, path=("baseline",)) -> tuple[dict, dict]:
    data = _section(doc, data, path, {"k", "k_min", "k_max", "linkage", "max_iter"})
    k = data.get("k")
    if k is not None:
        k = _int(doc, data, path + ("k",), None, lo=1)
    kw = dict(k_min=_int(doc, data, path + ("k_min",), 2, lo=1),
              k_max=_int(doc, data, path + ("k_max",), 8, lo=1),
              linkage=_choice(doc, data, path + ("linkage",), "average", ("average", "single", "complete")),
              max_iter=_int(doc, data, path + ("max_iter",), 100, lo=1))
    if kw["k_min"] > kw["k_max"]:
        doc.fail(path + ("k_min",), "k_min exceeds k_max")
    return kw, {"k": k}


@dataclass
class ClusterConfig:
    method: str = "rtlp"
    rtlp: RtlpConfig = field(default_factory=RtlpConfig)
    baseline: dict = field(default_factory=dict)
    k: int | None = None

    def baseline_config(self, seed: int = 0) -> BaselineConfig:
        method = "kmedoids" if self.method == "kmedoids" else "hierarchical"
        return BaselineConfig(method=method, seed=seed, **self.baseline)


def _cluster(doc, data) -> ClusterConfig:
    method = _choice(doc, data, ("method",), "rtlp", METHODS)
    kw, extra = _baseline(doc, data.get("baseline"))
    return ClusterConfig(method, _rtlp(doc, data.get("rtlp")), kw, extra["k"])


@dataclass
class ExperimentConfig:
    simulation: SimConfig
    scenarios: tuple
    contaminations: tuple
    p_curves: tuple
    methods: tuple
    mode: str
    replicates: int
    seed: int
    cluster: ClusterConfig


def load_sim(text: str, name="<config>") -> SimConfig:
    doc = _Doc(text, name)
    _section(doc, doc.data, (), SIM_KEYS)
    return _sim(doc, doc.data)


def load_cluster(text: str, name="<config>") -> ClusterConfig:
    doc = _Doc(text, name)
    _section(doc, doc.data, (), {"method", "rtlp", "baseline"})
    return _cluster(doc, doc.data)


def load_experiment(text: str, name="<config>") -> ExperimentConfig:
    doc = _Doc(text, name)
    data = _section(doc, doc.data, (), {"seed", "replicates", "simulation", "methods", "mode",
                                        "rtlp", "baseline"})
    sp = ("simulation",)
    sim_data = _section(doc, data.get("simulation"), sp,
                        SIM_KEYS | {"scenarios", "contaminations", "p_curves"})

    def listed(key, single, default, check):
        if key in sim_data:
            vals = sim_data[key]
            if not isinstance(vals, list) or not vals:
                doc.fail(sp + (key,), "expected a non-empty list")
        else:
            vals = [sim_data.get(single, default)]
        for v in vals:
            if not check(v):
                doc.fail(sp + (key if key in sim_data else single,), f"invalid entry {v!r}")
        return tuple(vals)

    scenarios = listed("scenarios", "scenario", "S4", lambda v: v in SCENARIOS)
    conts = listed("contaminations", "contamination", "C1",
                   lambda v: v in CONTAMINATIONS or v in ("none", None))
    p_curves = tuple(float(v) for v in listed(
        "p_curves", "p_curve", 0.0,
        lambda v: not isinstance(v, bool) and isinstance(v, (int, float)) and 0 <= v < 1))
    sim = _sim(doc, sim_data, sp)
    methods = data.get("methods", ["rtlp"])
    if not isinstance(methods, list) or not methods or any(m not in METHODS for m in methods):
        doc.fail(("methods",), f"expected a list drawn from {', '.join(METHODS)}")
    kw, extra = _baseline(doc, data.get("baseline"))
    cl = ClusterConfig("rtlp", _rtlp(doc, data.get("rtlp")), kw, extra["k"])
    for s in scenarios:
        _build(doc, sp + ("scenarios",), ScenarioSpec, id=s, n_clusters=sim.scenario.n_clusters,
               n_samples=sim.scenario.n_samples, grid_size=sim.scenario.grid_size, p=sim.scenario.p)
    return ExperimentConfig(
        simulation=sim,
        scenarios=scenarios,
        contaminations=tuple(None if c in ("none", None) else c for c in conts),
        p_curves=p_curves,
        methods=tuple(methods),
        mode=_choice(doc, data, ("mode",), "multivariate", MODES),
        replicates=_int(doc, data, ("replicates",), 20, lo=1),
        seed=_int(doc, data, ("seed",), 0, lo=0),
        cluster=cl,
    )


def read_config(path, loader):
    if path is None:
        return loader("", "<defaults>")
    with open(path, encoding="utf-8") as fh:
        return loader(fh.read(), str(path))


__all__ = ["ConfigError", "SimConfig", "ClusterConfig", "ExperimentConfig", "load_sim",
           "load_cluster", "load_experiment", "read_config", "DEFAULT_SIGMA2"]
