"""Simulated sparse multivariate functional data with known clusters.

Curves are ``mean + noise`` on an equidistant grid. Means come from one of
six cluster scenarios, a fraction of curves is replaced by contaminated
means (the true outliers), noise is a Gaussian process with a multivariate
Matérn covariance, and finally some curves lose a random subset of their
grid points.

Randomness is counter based: every draw comes from a Philox stream keyed by
``(seed, purpose, index...)``, so any curve can be regenerated on its own and
the output does not depend on evaluation order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np
from scipy.special import gamma, gammaln, kv

from .core import SparseSample, StandardGrid
from .metrics import OUTLIER

SCENARIOS = ("S1", "S2", "S3", "S4", "S5", "S6")
CONTAMINATIONS = ("C1", "C2", "C3", "C4", "C5", "C6")
DEFAULT_SIGMA2 = (0.05, 0.2, 0.3)


class Stream(IntEnum):
    MATERN = 1
    MEAN_AUX = 2
    OUTLIER_PICK = 3
    CONTAMINATION = 4
    NOISE = 5
    SPARSE_PICK = 6
    SPARSE_INDEX = 7


def rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator addressed by ``(seed, *key)``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


# --------------------------------------------------------------------------
# Matérn cross-covariance

def matern_correlation(h, nu: float, eta: float = 1.0) -> np.ndarray:
    """``2^(1-nu) / Gamma(nu) * (eta h)^nu * K_nu(eta h)``, equal to 1 at h = 0."""
    x = eta * np.abs(np.asarray(h, dtype=float))
    out = np.ones_like(x)
    pos = x > 0
    xp = x[pos]
    # log form avoids overflow of Gamma and underflow of K_nu
    with np.errstate(divide="ignore", under="ignore"):
        out[pos] = np.exp((1 - nu) * math.log(2) - gammaln(nu) + nu * np.log(xp)) * kv(nu, xp)
    return out


@dataclass(frozen=True)
class MaternParams:
    sigma2: tuple
    nu: tuple
    beta: np.ndarray
    eta: float = 1.0

    def __post_init__(self):
        sigma2 = tuple(float(s) for s in self.sigma2)
        nu = tuple(float(v) for v in self.nu)
        beta = np.asarray(self.beta, dtype=float)
        p = len(sigma2)
        if len(nu) != p or beta.shape != (p, p):
            raise ValueError("sigma2, nu and beta disagree on the dimension")
        if any(s < 0 for s in sigma2) or any(v <= 0 for v in nu) or self.eta <= 0:
            raise ValueError("need sigma2 >= 0, nu > 0, eta > 0")
        if not np.allclose(beta, beta.T) or not np.allclose(np.diag(beta), 1.0):
            raise ValueError("beta must be symmetric with unit diagonal")
        if np.linalg.eigvalsh(beta).min() < -1e-10:
            raise ValueError("beta is not positive semidefinite")
        object.__setattr__(self, "sigma2", sigma2)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "beta", beta)

    @property
    def p(self) -> int:
        return len(self.sigma2)

    def rho(self) -> np.ndarray:
        """Colocated correlations; the Gamma ratios use ``p / 2``."""
        p, nu = self.p, np.asarray(self.nu)
        half = p / 2
        r = np.ones((p, p))
        for i in range(p):
            for j in range(p):
                if i == j:
                    continue
                nij = 0.5 * (nu[i] + nu[j])
                r[i, j] = self.beta[i, j] * math.sqrt(
                    gamma(nu[i] + half) / gamma(nu[i]) * gamma(nu[j] + half) / gamma(nu[j])
                ) * gamma(nij) / gamma(nij + half)
        return r


def draw_beta(p: int, gen: np.random.Generator, max_iter: int = 200) -> np.ndarray:
    """Unit-diagonal symmetric matrix with U(0, 1) off-diagonals, shrunk until PSD."""
    beta = np.eye(p)
    iu = np.triu_indices(p, 1)
    beta[iu] = gen.uniform(0.0, 1.0, size=len(iu[0]))
    beta = np.triu(beta) + np.triu(beta, 1).T
    for _ in range(max_iter):
        if np.linalg.eigvalsh(beta).min() >= -1e-10:
            return beta
        off = beta - np.eye(p)
        beta = np.eye(p) + 0.9 * off
    raise RuntimeError("could not make beta positive semidefinite")


def default_matern(p: int, seed: int, sigma2=None, nu_range=(0.2, 0.3), eta: float = 1.0) -> MaternParams:
    """Parameters drawn the way the simulation study does."""
    gen = rng(seed, Stream.MATERN)
    if sigma2 is None:
        sigma2 = [DEFAULT_SIGMA2[i % 3] for i in range(p)]
    nu = gen.uniform(nu_range[0], nu_range[1], size=p)
    beta = draw_beta(p, gen)
    return MaternParams(tuple(sigma2), tuple(nu), beta, eta)


def matern_cov(params: MaternParams, grid: StandardGrid | np.ndarray) -> np.ndarray:
    """``pT x pT`` covariance; block ``(i, j)`` covers variables i and j."""
    pts = grid.points if isinstance(grid, StandardGrid) else np.asarray(grid, dtype=float)
    T, p = pts.size, params.p
    h = np.abs(pts[:, None] - pts[None, :])
    sd = np.sqrt(params.sigma2)
    rho = params.rho()
    cov = np.empty((p * T, p * T))
    for i in range(p):
        for j in range(i, p):
            if i == j:
                block = params.sigma2[i] * matern_correlation(h, params.nu[i], params.eta)
            else:
                nij = 0.5 * (params.nu[i] + params.nu[j])
                block = rho[i, j] * sd[i] * sd[j] * matern_correlation(h, nij, params.eta)
            cov[i * T:(i + 1) * T, j * T:(j + 1) * T] = block
            cov[j * T:(j + 1) * T, i * T:(i + 1) * T] = block.T
    return cov


class FactorizationError(RuntimeError):
    pass


def noise_factor(cov: np.ndarray) -> np.ndarray:
    """Lower factor ``L`` with ``L L^T ~ cov``.

    Coordinates with zero variance are held at zero. A diagonal jitter starting
    at 1e-10 is escalated tenfold up to 1e-6 when Cholesky fails.
    """
    cov = np.asarray(cov, dtype=float)
    if not np.allclose(cov, cov.T, rtol=0, atol=1e-12):
        raise ValueError("covariance must be symmetric")
    n = cov.shape[0]
    L = np.zeros_like(cov)
    active = np.flatnonzero(np.diag(cov) > 0)
    if active.size == 0:
        return L
    sub = cov[np.ix_(active, active)]
    jitter = 1e-10
    while jitter <= 1e-6 * (1 + 1e-9):
        try:
            Ls = np.linalg.cholesky(sub + jitter * np.eye(active.size))
            L[np.ix_(active, active)] = Ls
            return L
        except np.linalg.LinAlgError:
            jitter *= 10
    raise FactorizationError(f"Cholesky failed at maximal jitter for a {n}x{n} covariance")


def sample_noise(cov, n_draws: int, seed: int, factor: np.ndarray | None = None,
                 first_index: int = 0) -> np.ndarray:
    """``n_draws`` Gaussian vectors with covariance ``cov``.

    Draw ``d`` uses the stream ``(seed, NOISE, first_index + d)``.
    """
    L = noise_factor(cov) if factor is None else factor
    dim = L.shape[0]
    out = np.empty((n_draws, dim))
    for d in range(n_draws):
        z = rng(seed, Stream.NOISE, first_index + d).standard_normal(dim)
        out[d] = L @ z
    return out


# --------------------------------------------------------------------------
# Cluster mean scenarios

@dataclass(frozen=True)
class ScenarioSpec:
    id: str = "S4"
    n_clusters: int = 3
    n_samples: int = 150
    grid_size: int = 50
    p: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.id not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.id!r}")
        if self.n_clusters < 1 or self.n_samples % self.n_clusters:
            raise ValueError("n_samples must be a positive multiple of n_clusters")
        if self.grid_size < 3:
            raise ValueError("grid_size must be at least 3")
        if self.id in ("S4", "S5", "S6") and self.p != 3:
            raise ValueError(f"scenario {self.id} is defined for p = 3 only")
        if self.id in ("S2", "S5", "S6") and self.n_clusters > 3:
            raise ValueError(f"scenario {self.id} is defined for at most 3 clusters")
        if self.p < 1:
            raise ValueError("p must be positive")


def mean_aux(spec: ScenarioSpec, k: int, v: int):
    """Per-(cluster, variable) randoms ``l ~ U(1, p)`` and ``r ~ Bernoulli(1/2)``."""
    gen = rng(spec.seed, Stream.MEAN_AUX, k, v)
    l = gen.uniform(1.0, float(spec.p)) if spec.p > 1 else 1.0
    r = int(gen.random() < 0.5)
    return l, r


def _s2_warp(k: int, v: int, t):
    if k == 1:
        return np.log2(t + 1)
    table = {
        (2, 1): lambda t: t ** 2,
        (2, 2): lambda t: 1 - np.cos(np.pi * t / 2),
        (2, 3): lambda t: np.sin(np.pi * t / 2) ** 2,
        (3, 1): lambda t: t ** 3,
        (3, 2): lambda t: np.sin(np.pi * t / 2),
        (3, 3): lambda t: t,
    }
    if (k, v) not in table:
        raise ValueError(f"scenario S2 has no warp for cluster {k}, variable {v}")
    return table[(k, v)](t)


def scenario_mean(spec: ScenarioSpec, k: int, v: int, t, aux=None) -> np.ndarray:
    """Mean of variable ``v`` (1-based) for cluster ``k`` (1-based) at times ``t``."""
    t = np.asarray(t, dtype=float)
    l, r = aux if aux is not None else mean_aux(spec, k, v)
    sid = spec.id
    if sid == "S1":
        return 2 * v * np.cos((l + r * v / 4) * np.pi * t) + (-1) ** r * 3 * k * v
    if sid == "S2":
        return 2 * v * np.cos((l + r * v / 4) * np.pi * _s2_warp(k, v, t))
    if sid == "S3":
        return 6 * np.cos((l + v) * np.pi * (t + 0.2 * l * k) / 2)
    if sid == "S4":
        w = 1.01 * (t + k - 1) + 0.548
        return {1: 5 * np.cos(3 * w) * np.cos(w),
                2: 5 * np.cos(3 * w) * np.sin(w),
                3: 5 * np.cos(3 * w)}[v]
    if sid == "S5":
        s = np.sin(10 * np.pi * t)
        lg = np.log2(t + 1)
        table = {
            1: (-5 * t - s, 5 * s, 5 * t + s),
            2: (11 * t ** 2, 7 * t, 5 * lg),
            3: (7 * lg, 14 * lg, 21 * lg),
        }
        return table[v][k - 1]
    if sid == "S6":
        table = {
            1: (5 * np.cos(10 * np.pi * t), 5 * t * np.cos(20 * np.pi * t + 10),
                5 * t * np.sin(20 * np.pi * t + 10)),
            2: (5.5 * np.sin(10 * np.pi * t), 5 * t * np.sin(20 * np.pi * t + 10),
                5 * np.log2(t + 1)),
            3: (10 * t, 10 - 10 * t, 10 * t),
        }
        return table[v][k - 1]
    raise ValueError(f"unknown scenario {sid!r}")


# --------------------------------------------------------------------------
# Contamination

@dataclass(frozen=True)
class ContaminationSpec:
    id: str | None = None
    rate: float = 0.10

    def __post_init__(self):
        if self.id in ("none", "None", ""):
            object.__setattr__(self, "id", None)
        if self.id is not None and self.id not in CONTAMINATIONS:
            raise ValueError(f"unknown contamination {self.id!r}")
        if not 0.0 <= self.rate < 0.5:
            raise ValueError("contamination rate must be in [0, 0.5)")

    def n_outliers(self, n: int) -> int:
        if self.id is None:
            return 0
        # guard against 150 * 0.1 = 15.000000000000002
        return int(math.ceil(round(n * self.rate, 9)))


def contaminate(mean: np.ndarray, t: np.ndarray, cid: str, v: int, gen: np.random.Generator) -> np.ndarray:
    """Contaminated version of one variable's mean curve sampled at ``t``.

    ``v`` is the 1-based variable index; it sets the slope range of C4 and
    which trigonometric term C5/C6 use (cos, sin, -cos, repeating).
    """
    mean = np.asarray(mean, dtype=float)
    t = np.asarray(t, dtype=float)
    lo, hi = mean.min(), mean.max()
    h = max(abs(lo), abs(hi)) / 2
    r = 1.0 if gen.uniform(-1.0, 1.0) > 0 else -1.0
    if cid == "C1":
        return mean + r * h
    if cid == "C2":
        st = gen.uniform(0.0, 0.9)
        return np.where((t >= st) & (t <= st + 0.1), mean + r * h, mean)
    if cid == "C3":
        st = gen.uniform(0.0, 0.5)
        return np.where(t >= st, mean + r * h, mean)
    if cid == "C4":
        c = gen.uniform(lo / 2, hi / 2)
        s = gen.uniform(-2.0 * v, 2.0 * v)
        eps = gen.uniform(-0.3, 0.3, size=t.size)
        return c + s * t + eps
    if cid in ("C5", "C6"):
        omega = 0.5 if cid == "C5" else 30.0
        mid = lo / 2 + hi / 2
        a = gen.uniform(-h, 0.0)
        wave = (np.cos, np.sin, lambda x: -np.cos(x))[(v - 1) % 3](omega * np.pi * t)
        return mid + h * wave + a
    raise ValueError(f"unknown contamination {cid!r}")


# --------------------------------------------------------------------------
# Sparsification

@dataclass(frozen=True)
class SparsitySpec:
    p_size: float = 0.0
    p_curve: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.p_size <= 1.0:
            raise ValueError("p_size must be in [0, 1]")
        if not 0.0 <= self.p_curve < 1.0:
            raise ValueError("p_curve must be in [0, 1)")

    def n_removed(self, T: int) -> int:
        return int(math.floor(T * self.p_curve + 0.5))

    def n_sparse(self, n: int) -> int:
        return int(math.ceil(round(n * self.p_size, 9)))


def sparsify(samples: list[SparseSample], spec: SparsitySpec, seed: int) -> list[SparseSample]:
    """Drop ``round(T * p_curve)`` random grid points from ``ceil(N * p_size)`` curves.

    All variables of a dropped point are removed together.
    """
    if spec.p_size == 0 or spec.p_curve == 0:
        return list(samples)
    n = len(samples)
    chosen = rng(seed, Stream.SPARSE_PICK).choice(n, size=spec.n_sparse(n), replace=False)
    out = list(samples)
    for i in sorted(int(c) for c in chosen):
        s = samples[i]
        n_drop = spec.n_removed(s.n_obs)
        if s.n_obs - n_drop < 2:
            raise ValueError(
                f"p_curve={spec.p_curve} leaves fewer than 2 points on a {s.n_obs}-point curve"
            )
        drop = rng(seed, Stream.SPARSE_INDEX, i).choice(s.n_obs, size=n_drop, replace=False)
        keep = np.setdiff1d(np.arange(s.n_obs), drop)
        out[i] = SparseSample(s.id, s.times[keep], s.values[keep])
    return out


# --------------------------------------------------------------------------
# Full generator

@dataclass
class LabeledDataset:
    samples: list
    labels: list
    means: np.ndarray = field(repr=False, default=None)

    @property
    def outlier_indices(self) -> list[int]:
        return [i for i, lab in enumerate(self.labels) if lab == OUTLIER]


def generate(spec: ScenarioSpec, cont: ContaminationSpec | None = None,
             sparsity: SparsitySpec | None = None, matern: MaternParams | None = None,
             signs=None) -> LabeledDataset:
    """Build one labelled dataset; fully determined by ``spec.seed``.

    ``signs`` optionally fixes the Bernoulli ``r`` of the S1-S3 means per
    cluster (sequence indexed by cluster, 0 or 1) instead of drawing it.
    """
    cont = cont or ContaminationSpec(None, 0.0)
    sparsity = sparsity or SparsitySpec()
    seed = spec.seed
    grid = StandardGrid(spec.grid_size)
    t = grid.points
    N, K, p = spec.n_samples, spec.n_clusters, spec.p
    per = N // K

    cluster_means = np.empty((K, spec.grid_size, p))
    for k in range(1, K + 1):
        for v in range(1, p + 1):
            l, r = mean_aux(spec, k, v)
            if signs is not None:
                r = int(signs[k - 1])
            cluster_means[k - 1, :, v - 1] = scenario_mean(spec, k, v, t, (l, r))
    labels = [str(i // per + 1) for i in range(N)]
    means = np.stack([cluster_means[i // per] for i in range(N)])

    n_out = cont.n_outliers(N)
    if n_out:
        picked = rng(seed, Stream.OUTLIER_PICK).choice(N, size=n_out, replace=False)
        for i in sorted(int(x) for x in picked):
            gen = rng(seed, Stream.CONTAMINATION, i)
            for v in range(1, p + 1):
                means[i, :, v - 1] = contaminate(means[i, :, v - 1], t, cont.id, v, gen)
            labels[i] = OUTLIER

    params = matern if matern is not None else default_matern(p, seed)
    if params.p != p:
        raise ValueError("Matérn parameters do not match the scenario dimension")
    L = noise_factor(matern_cov(params, grid))
    noise = sample_noise(None, N, seed, factor=L)
    # noise vectors are stacked variable-major: [var1 over t, var2 over t, ...]
    values = means + noise.reshape(N, p, spec.grid_size).transpose(0, 2, 1)

    width = len(str(N))
    samples = [SparseSample(f"c{i + 1:0{width}d}", t, values[i]) for i in range(N)]
    samples = sparsify(samples, sparsity, seed)
    return LabeledDataset(samples, labels, means)
