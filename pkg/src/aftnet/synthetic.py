"""Synthetic regulatory-network benchmark.

Each regulatory module is a transcription factor (TF) hub linked to the genes
it regulates.  TF expressions are i.i.d. standard normal; a regulated gene
is drawn conditionally on its TF (or, for genes shared by two TFs, on the
standardized TF average) with correlation ``+rho`` or ``-rho``.  Survival
times follow the Weibull AFT model with a sparse coefficient vector whose
first ``p_active`` entries are nonzero, and are right-censored by an
independent exponential whose rate is tuned to hit a target censoring rate.

Randomness comes from one :class:`numpy.random.SeedSequence` split into four
child streams (design, truth, times, censoring), so a scenario is fully
determined by its seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .network import NetworkPrior, build_laplacian
from .survival_model import SurvivalDataset

NOT_OVERLAPPING = "disjoint"
OVERLAPPING = "overlap"
TOPOLOGIES = (NOT_OVERLAPPING, OVERLAPPING)

# (r, n_train, n_test) per high-dimensionality effect
EFFECTS = {
    "weak": (20, 110, 55),
    "strong": (100, 275, 138),
}

# overlapping pairs: (shared genes, genes exclusive to each TF)
_OVERLAP_LAYOUT = ((10, 5), (6, 7))


@dataclass(frozen=True)
class ScenarioConfig:
    topology: str = NOT_OVERLAPPING
    r: int = 20
    genes_per_module: int = 10
    v: int = 5
    rho: float = 0.7
    n_train: int = 110
    n_test: int = 55
    sigma_true: float = 1.0
    p_active: int = 88
    censor_rate: float = 0.30
    seed: int = 0

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"topology must be one of {TOPOLOGIES}, "
                             f"got {self.topology!r}")
        if self.topology == OVERLAPPING:
            if self.r < 4:
                raise ValueError("the overlapping topology needs r >= 4")
            if self.genes_per_module != 10:
                raise ValueError("the overlapping topology is defined for "
                                 "10 genes per module")
        if self.r < 1 or self.genes_per_module < 1:
            raise ValueError("r and genes_per_module must be positive")
        if not 0 <= self.v <= self.genes_per_module:
            raise ValueError(f"v = {self.v} exceeds the {self.genes_per_module} "
                             f"genes of a module")
        if not 0 <= self.censor_rate < 1:
            raise ValueError("censor_rate must lie in [0, 1)")
        if not -1 < self.rho < 1:
            raise ValueError("rho must lie in (-1, 1)")
        if not self.sigma_true > 0:
            raise ValueError("sigma_true must be positive")

    @property
    def p(self) -> int:
        return self.r * (self.genes_per_module + 1)

    @property
    def n(self) -> int:
        return self.n_train + self.n_test

    @classmethod
    def preset(cls, effect="weak", topology=NOT_OVERLAPPING, sigma=1.0,
               seed=0, **overrides):
        """Benchmark presets: ``weak`` (p=220, 110/55) or ``strong`` (p=1100, 275/138)."""
        try:
            r, n_train, n_test = EFFECTS[effect]
        except KeyError:
            raise ValueError(f"effect must be one of {sorted(EFFECTS)}") from None
        return cls(topology=topology, r=r, n_train=n_train, n_test=n_test,
                   sigma_true=sigma, seed=seed, **overrides)

    def replication(self, index: int) -> "ScenarioConfig":
        return replace(self, seed=self.seed + index)


@dataclass(frozen=True)
class ModuleMap:
    """Module layout of a generated network.

    ``tfs[m]`` is the column of TF ``m``.  ``groups`` lists, for every set of
    genes sharing a conditioning variable, the TFs involved and the gene
    columns.  ``node_modules[j]`` is the tuple of modules node ``j`` belongs
    to.
    """

    tfs: tuple
    groups: tuple
    node_modules: tuple
    names: tuple


@dataclass(frozen=True)
class GroundTruth:
    beta_star: np.ndarray
    active_set: np.ndarray
    sigma_true: float
    module_map: Optional[ModuleMap] = field(default=None, compare=False)

    @property
    def p(self) -> int:
        return self.beta_star.shape[0]

    @property
    def p_active(self) -> int:
        return int(self.active_set.size)


def _streams(seed):
    design, truth, times, censor = np.random.SeedSequence(seed).spawn(4)
    return (np.random.default_rng(design), np.random.default_rng(truth),
            np.random.default_rng(times), np.random.default_rng(censor))


def gen_network(cfg: ScenarioConfig):
    """Build the TF/gene adjacency and module layout.

    Columns are ordered in module blocks ``[TF_m, genes of m]``; genes shared
    by two TFs sit in the block of the earlier one.

    Returns
    -------
    prior : NetworkPrior
    module_map : ModuleMap
    """
    gpm = cfg.genes_per_module
    tfs, groups, edges = [], [], []
    node_modules, names = [], []

    def add_node(name, modules):
        names.append(name)
        node_modules.append(tuple(modules))
        return len(names) - 1

    # edges and groups hold module ids until every TF has a column
    def add_genes(count, modules, label):
        idx = [add_node(f"G{label}_{k + 1}", modules) for k in range(count)]
        for g in idx:
            for m in modules:
                edges.append((m, g))
        groups.append((tuple(modules), tuple(idx)))

    m = 0
    if cfg.topology == OVERLAPPING:
        for shared, exclusive in _OVERLAP_LAYOUT:
            a, b = m, m + 1
            tfs.append(add_node(f"TF{a + 1}", (a,)))
            add_genes(shared, (a, b), f"{a + 1}.{b + 1}")
            add_genes(exclusive, (a,), f"{a + 1}")
            tfs.append(add_node(f"TF{b + 1}", (b,)))
            add_genes(exclusive, (b,), f"{b + 1}")
            m += 2
    for m in range(m, cfg.r):
        tfs.append(add_node(f"TF{m + 1}", (m,)))
        add_genes(gpm, (m,), f"{m + 1}")

    p = len(names)
    assert p == cfg.p
    edges = [(tfs[m], g) for m, g in edges]
    groups = [(tuple(tfs[m] for m in mods), idx) for mods, idx in groups]
    rows, cols = zip(*edges)
    A = sp.coo_matrix((np.ones(len(edges)), (rows, cols)), shape=(p, p))
    A = (A + A.T).tocsr()
    prior = build_laplacian(A, names)
    mmap = ModuleMap(tfs=tuple(tfs), groups=tuple(groups),
                     node_modules=tuple(node_modules), names=tuple(names))
    return prior, mmap


def _n_positive(group_size, cfg):
    # v of every genes_per_module genes are activated; groups of other sizes
    # get the same proportion, rounded half up
    return int(math.floor(cfg.v * group_size / cfg.genes_per_module + 0.5))


def gen_design(prior: NetworkPrior, module_map: ModuleMap, cfg: ScenarioConfig,
               n: Optional[int] = None, rng=None) -> np.ndarray:
    """Draw an ``(n, p)`` expression matrix with unit-variance columns."""
    n = cfg.n if n is None else n
    rng = _streams(cfg.seed)[0] if rng is None else rng
    X = np.empty((n, prior.p))
    tf_cols = list(module_map.tfs)
    X[:, tf_cols] = rng.standard_normal((n, len(tf_cols)))
    rho = cfg.rho
    noise_sd = math.sqrt(1.0 - rho * rho)
    for tf_idx, genes in module_map.groups:
        cond = X[:, list(tf_idx)].sum(axis=1) / math.sqrt(len(tf_idx))
        genes = np.asarray(genes)
        signs = -np.ones(genes.size)
        pos = rng.choice(genes.size, size=_n_positive(genes.size, cfg),
                         replace=False)
        signs[pos] = 1.0
        Z = rng.standard_normal((n, genes.size))
        X[:, genes] = rho * cond[:, None] * signs + noise_sd * Z
    return X


def gen_true_beta(cfg: ScenarioConfig, module_map: Optional[ModuleMap] = None,
                  rng=None) -> GroundTruth:
    """First half of the active coefficients ~ U(0.1, 0.5), second half ~ U(-0.5, -0.1)."""
    p, s = cfg.p, cfg.p_active
    if p < s:
        raise ValueError(f"p = {p} is smaller than p_active = {s}")
    rng = _streams(cfg.seed)[1] if rng is None else rng
    half = s // 2
    beta = np.zeros(p)
    beta[:half] = rng.uniform(0.1, 0.5, size=half)
    beta[half:s] = rng.uniform(-0.5, -0.1, size=s - half)
    beta.setflags(write=False)
    return GroundTruth(beta_star=beta, active_set=np.arange(s),
                       sigma_true=cfg.sigma_true, module_map=module_map)


def calibrate_censoring(log_t, log_e, n_censored, max_iter=200):
    """Log-rate of an exponential censoring law giving ``n_censored`` censored.

    Subject ``i`` is censored when ``log_e[i] - rate < log_t[i]``, so the
    censored count increases with the log-rate; bisect until it matches.
    """
    q = log_e - log_t
    lo, hi = float(q.min()) - 1.0, float(q.max()) + 1.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        count = int(np.count_nonzero(q < mid))
        if count == n_censored:
            return mid
        if count < n_censored:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def gen_survival(X, truth: GroundTruth, cfg: ScenarioConfig, rng_times=None,
                 rng_censor=None):
    """Weibull event times with calibrated exponential censoring.

    Returns
    -------
    log_times : ndarray
        ``min(log T, log C)``.
    events : ndarray
        ``1[T <= C]``.
    """
    X = np.asarray(X, dtype=float)
    if X.shape[1] != truth.p:
        raise ValueError(f"X has {X.shape[1]} columns, truth has {truth.p}")
    if not 0 <= cfg.censor_rate < 1:
        raise ValueError("censor_rate must lie in [0, 1)")
    streams = _streams(cfg.seed)
    rng_times = streams[2] if rng_times is None else rng_times
    rng_censor = streams[3] if rng_censor is None else rng_censor
    n = X.shape[0]
    u = rng_times.random(n)
    # T = exp(x'b) * (-log U)^sigma, on the log scale
    log_t = X @ truth.beta_star + truth.sigma_true * np.log(-np.log1p(-u))
    n_cens = int(math.floor(cfg.censor_rate * n + 0.5))
    if n_cens == 0:
        return log_t, np.ones(n)
    log_e = np.log(rng_censor.exponential(size=n))
    log_rate = calibrate_censoring(log_t, log_e, n_cens)
    log_c = log_e - log_rate
    events = (log_t <= log_c).astype(float)
    return np.minimum(log_t, log_c), events


def simulate_scenario(cfg: ScenarioConfig):
    """Generate one replication.

    Returns
    -------
    train, test : SurvivalDataset
        The first ``n_train`` rows and the remaining ``n_test`` rows of a
        single sample.
    prior : NetworkPrior
    truth : GroundTruth
    """
    rng_design, rng_truth, rng_times, rng_censor = _streams(cfg.seed)
    prior, mmap = gen_network(cfg)
    X = gen_design(prior, mmap, cfg, cfg.n, rng_design)
    truth = gen_true_beta(cfg, mmap, rng_truth)
    y, d = gen_survival(X, truth, cfg, rng_times, rng_censor)
    k = cfg.n_train
    names = mmap.names
    train = SurvivalDataset(X[:k], y[:k], d[:k], names)
    test = SurvivalDataset(X[k:], y[k:], d[k:], names)
    return train, test, prior, truth
