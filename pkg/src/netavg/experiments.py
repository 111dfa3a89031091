"""Monte Carlo studies: convergence, sample complexity, non-asymptotic regime.

Replications of one grid point run as a single vectorized batch; grid points
may be spread over a thread pool. Results are assembled by grid index, so they
do not depend on scheduling.
"""

from __future__ import annotations

import enum
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from . import topology as topo
from .algorithms import (
    BurnInWarning,
    dmasg_schedule,
    dmasg_single_stage,
    run_dmasg_batch,
    run_dsg_batch,
    run_sda_batch,
    theorem1_params,
)
from .bounds import dsg_upper_bound, sda_upper_bound
from .gossip import gossip_from_weights, metropolis_hastings, shifted_weights_dmasg
from .observation import uniform_means_instance

__all__ = [
    "Family",
    "TopologySpec",
    "ExperimentConfig",
    "SummaryRow",
    "SlopeFit",
    "SampleComplexityCapError",
    "desk_config",
    "full_scale_config",
    "run_convergence",
    "run_sample_complexity",
    "run_non_asymptotic",
    "run_experiment",
    "fit_loglog_slope",
    "slopes_by_algorithm",
    "small_epsilon_grid",
    "t_schedule",
    "network",
]

FULL_N_GRID = (148, 190, 244, 314, 403, 518, 665)
FULL_EPS_LARGE = (0.015, 0.0122, 0.01, 0.0082, 0.0067, 0.0055)
FULL_EPS_SMALL = (0.00033, 0.00027, 0.00022, 0.00018, 0.00015, 0.00012)
ALL_KINDS = ("path", "cycle", "star", "grid", "erdos_renyi")


class Family(str, enum.Enum):
    CONVERGENCE = "convergence"
    SAMPLE_COMPLEXITY = "sample_complexity"
    NON_ASYMPTOTIC = "non_asymptotic"


class SampleComplexityCapError(RuntimeError):
    pass


@dataclass(frozen=True)
class TopologySpec:
    kind: str
    n: int
    p: float | None = None
    seed: int = 0

    def build(self) -> topo.Topology:
        return topo.build(self.kind, self.n, self.p, self.seed)

    @property
    def label(self) -> str:
        return self.kind


@dataclass(frozen=True)
class Network:
    topology: topo.Topology
    weights: object
    gossip: object
    shifted: object


@lru_cache(maxsize=64)
def network(spec: TopologySpec) -> Network:
    """Topology with MH weights, ``L = I - W`` and ``W1 = (I + W)/2`` (memoized)."""
    t = spec.build()
    w = metropolis_hastings(t)
    return Network(t, w, gossip_from_weights(w), shifted_weights_dmasg(w))


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one study needs; every random stream derives from ``seed``.

    ``t_grid`` overrides the convergence grid otherwise derived from the
    D-MASG stage counts. ``t_stride`` is the geometric growth factor of the
    sample-complexity scan (``None`` scans ``T = 1, 2, 3, ...``).
    """

    family: Family
    topologies: tuple[TopologySpec, ...] = ()
    algorithms: tuple[str, ...] = ("sda",)
    n_reps: int = 50
    seed: int = 0
    b: float = 1.0
    sigma: float = 1.0
    dim: int = 1
    t_grid: tuple[int, ...] | None = None
    stage_counts: tuple[int, ...] = (3, 4, 5, 6)
    eps_grid: tuple[float, ...] = ()
    n_grid: tuple[int, ...] = ()
    t_cap: int = 100_000
    t_stride: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if self.n_reps < 1:
            raise ValueError("n_reps must be at least 1")
        for name in ("t_grid", "stage_counts", "n_grid"):
            grid = getattr(self, name)
            if grid is not None and len(grid) and list(grid) != sorted(grid):
                raise ValueError(f"{name} must be sorted ascending")
        if any(e <= 0 for e in self.eps_grid):
            raise ValueError("eps_grid must be positive")
        if list(self.eps_grid) != sorted(self.eps_grid, reverse=True):
            raise ValueError("eps_grid must be sorted descending")
        if self.family is Family.CONVERGENCE and not self.topologies:
            raise ValueError("convergence study needs at least one topology")
        if self.family is Family.SAMPLE_COMPLEXITY and (not self.topologies or not self.eps_grid):
            raise ValueError("sample-complexity study needs topologies and an eps grid")
        if self.family is Family.NON_ASYMPTOTIC and not self.n_grid:
            raise ValueError("non-asymptotic study needs an N grid")
        if self.t_stride is not None and self.t_stride <= 1.0:
            raise ValueError("t_stride must exceed 1")

    def echo(self) -> dict:
        d = asdict(self)
        d["family"] = self.family.value
        return d


def _specs(n, seed, kinds=ALL_KINDS):
    out = []
    for k in kinds:
        size = n if k != "grid" else math.isqrt(n) ** 2
        out.append(TopologySpec(k, size, None, seed))
    return tuple(out)


def desk_config(family, **overrides) -> ExperimentConfig:
    """CI-sized defaults: N = 20 (grid 16), 50 replications.

    The sample-complexity study keeps 200 replications because its first
    crossing of each ``eps`` is read off a noisy mean-error curve.
    """
    family = Family(family)
    base = dict(family=family, n_reps=50, seed=0)
    if family is Family.CONVERGENCE:
        base.update(topologies=_specs(20, 0), algorithms=("sda", "dsg", "dmasg"), b=10.0,
                    stage_counts=(3, 4, 5, 6))
    elif family is Family.SAMPLE_COMPLEXITY:
        specs = _specs(20, 0, ("star", "cycle"))
        base.update(topologies=specs, algorithms=("sda",), b=1.0, t_stride=1.02, n_reps=200,
                    eps_grid=tuple(small_epsilon_grid(20, 1.0)), t_cap=20_000)
    else:
        base.update(n_grid=(64, 100, 144, 196, 256), algorithms=("sda", "dmasg"), b=0.0, n_reps=100)
    base.update(overrides)
    return ExperimentConfig(**base)


def full_scale_config(family, **overrides) -> ExperimentConfig:
    """Full-size settings: N = 100, 100 replications, the published grids."""
    family = Family(family)
    base = dict(family=family, n_reps=100, seed=0)
    if family is Family.CONVERGENCE:
        base.update(topologies=_specs(100, 0), algorithms=("sda", "dsg", "dmasg"), b=10.0,
                    stage_counts=(3, 4, 5, 6, 7, 8))
    elif family is Family.SAMPLE_COMPLEXITY:
        base.update(topologies=_specs(100, 0), algorithms=("sda",), b=1.0, eps_grid=FULL_EPS_SMALL,
                    t_cap=1_000_000)
    else:
        base.update(n_grid=FULL_N_GRID, algorithms=("sda", "dmasg"), b=0.0)
    base.update(overrides)
    return ExperimentConfig(**base)


@dataclass
class SummaryRow:
    family: str
    algorithm: str
    topology: str
    n_nodes: int
    kappa: float
    x_value: float
    t_total: int
    mean_mse: float
    std_error: float
    samples_per_node: int | None
    bound: float | None = None
    reached: bool = True

    FIELDS = ("family", "algorithm", "topology", "n_nodes", "kappa", "x_value", "t_total",
              "mean_mse", "std_error", "samples_per_node", "bound", "reached")


def _reps(config):
    return np.arange(config.n_reps)


def _run(alg, net, model, t_total, reps, dmasg_params=None):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BurnInWarning)
        if alg == "sda":
            return run_sda_batch(net.gossip, model, theorem1_params(net.gossip, t_total), reps,
                                 stride=t_total)
    if alg == "dsg":
        return run_dsg_batch(net.weights, model, t_total, reps, stride=t_total)
    if alg == "dmasg":
        params = dmasg_params or dmasg_single_stage(net.shifted, t_total)
        return run_dmasg_batch(net.shifted, model, params, reps, stride=t_total)
    raise ValueError(f"unknown algorithm {alg!r}")


def _bound(alg, net, instance, t_total):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if alg == "sda":
            return sda_upper_bound(net.gossip, instance, t_total).total
        if alg == "dsg":
            return dsg_upper_bound(net.weights, instance, t_total).total
    return None


def _pool_map(fn, tasks, threads):
    if threads is None or threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks))


def run_convergence(config: ExperimentConfig, threads: int = 1) -> list[SummaryRow]:
    """Mean squared error of each algorithm versus the iteration budget ``T``.

    SDA uses step 1/lambda_1(L) with burn-in T/2, DSG ``eta_t = 1/(t+1)`` and D-MASG the
    multistage schedule whose stage count produced ``T`` (a single stage when
    ``t_grid`` is given explicitly).
    """
    tasks = []
    for spec in config.topologies:
        net = network(spec)
        instance = uniform_means_instance(spec.n, config.dim, config.b, config.sigma, config.seed)
        if config.t_grid:
            grid = [(t, None) for t in config.t_grid]
        else:
            grid = []
            for k in config.stage_counts:
                sched = dmasg_schedule(net.shifted, k)
                grid.append((sched.t_total, sched))
        for alg in config.algorithms:
            for t_total, sched in grid:
                tasks.append((spec, net, instance, alg, t_total, sched))

    def one(task):
        spec, net, instance, alg, t_total, sched = task
        batch = _run(alg, net, instance.model, t_total, _reps(config), sched)
        return SummaryRow(config.family.value, alg, spec.label, spec.n, net.gossip.kappa_l,
                          float(t_total), t_total, batch.mean_error, batch.std_error,
                          batch.samples_used_per_node, _bound(alg, net, instance, t_total))

    return _pool_map(one, tasks, threads)


def t_schedule(t_cap: int, stride: float | None = None):
    """``1, 2, 3, ...`` or a geometric sequence with ratio ``stride`` (at least +1 per step)."""
    t = 1
    while t <= t_cap:
        yield t
        t = t + 1 if stride is None else max(t + 1, int(math.ceil(t * stride)))


def small_epsilon_grid(n_nodes: int, sigma2_total: float, n_points: int = 6,
                       t_low: int | None = None, t_high: int | None = None) -> list[float]:
    """Accuracies in the regime where the ``1/T`` variance term dominates.

    For SDA the network-averaged estimate has squared error
    ``~ 2 sigma^2 / T`` once ``T`` is large compared with ``N``; the grid is
    that curve evaluated at ``T`` geometric in ``[50 N, 250 N]``.
    """
    lo = t_low or 50 * n_nodes
    hi = t_high or 250 * n_nodes
    ts = np.geomspace(lo, hi, n_points)
    return [float(f"{2.0 * sigma2_total / t:.3g}") for t in ts]


def run_sample_complexity(config: ExperimentConfig, threads: int = 1) -> list[SummaryRow]:
    """Samples per node until the replication-mean error first drops below each ``eps``.

    Every ``T`` of the scan is a fresh run of ``n_reps`` replications; the
    scan stops once the smallest ``eps`` is met or ``t_cap`` is exceeded, in
    which case the unmet rows carry ``reached=False`` and no sample count.
    """
    for alg in config.algorithms:
        if alg not in ("sda", "dsg"):
            raise ValueError(f"sample-complexity study supports sda and dsg, not {alg!r}")
    tasks = [(spec, alg) for spec in config.topologies for alg in config.algorithms]
    eps_min = min(config.eps_grid)

    def one(task):
        spec, alg = task
        net = network(spec)
        instance = uniform_means_instance(spec.n, config.dim, config.b, config.sigma, config.seed)
        curve = []
        for t_total in t_schedule(config.t_cap, config.t_stride):
            batch = _run(alg, net, instance.model, t_total, _reps(config))
            curve.append((t_total, batch.mean_error, batch.std_error, batch.samples_used_per_node))
            if batch.mean_error <= eps_min:
                break
        rows = []
        for eps in config.eps_grid:
            hit = next((c for c in curve if c[1] <= eps), None)
            if hit is None:
                warnings.warn(f"{alg} on {spec.label}: eps={eps} not reached by T={config.t_cap}",
                              stacklevel=2)
                last = curve[-1]
                rows.append(SummaryRow(config.family.value, alg, spec.label, spec.n,
                                       net.gossip.kappa_l, eps, last[0], last[1], last[2], None,
                                       reached=False))
            else:
                rows.append(SummaryRow(config.family.value, alg, spec.label, spec.n,
                                       net.gossip.kappa_l, eps, hit[0], hit[1], hit[2], hit[3]))
        return rows

    return [row for rows in _pool_map(one, tasks, threads) for row in rows]


def run_non_asymptotic(config: ExperimentConfig, threads: int = 1) -> list[SummaryRow]:
    """Star graphs of growing size run for ``T = ceil(sqrt(kappa(L)))`` iterations."""
    tasks = [(n, alg) for n in config.n_grid for alg in config.algorithms]

    def one(task):
        n, alg = task
        spec = TopologySpec("star", n, None, config.seed)
        net = network(spec)
        instance = uniform_means_instance(n, config.dim, config.b, config.sigma, config.seed)
        # kappa of a star is an integer up to rounding; keep ceil from overshooting
        t_total = max(2, math.ceil(math.sqrt(net.gossip.kappa_l) - 1e-9))
        batch = _run(alg, net, instance.model, t_total, _reps(config))
        return SummaryRow(config.family.value, alg, "star", n, net.gossip.kappa_l,
                          net.gossip.kappa_l, t_total, batch.mean_error, batch.std_error,
                          batch.samples_used_per_node, _bound(alg, net, instance, t_total))

    return _pool_map(one, tasks, threads)


def run_experiment(config: ExperimentConfig, threads: int = 1) -> list[SummaryRow]:
    runner = {
        Family.CONVERGENCE: run_convergence,
        Family.SAMPLE_COMPLEXITY: run_sample_complexity,
        Family.NON_ASYMPTOTIC: run_non_asymptotic,
    }[config.family]
    return runner(config, threads)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float
    intercept: float
    n_points: int


def fit_loglog_slope(x, y) -> SlopeFit:
    """Least-squares line through ``(ln x, ln y)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("need at least two (x, y) pairs of equal length")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log fit needs positive x and y")
    lx, ly = np.log(x), np.log(y)
    design = np.column_stack([lx, np.ones_like(lx)])
    coef, *_ = np.linalg.lstsq(design, ly, rcond=None)
    slope, intercept = coef
    if x.size > 2:
        resid = ly - design @ coef
        s2 = float(resid @ resid) / (x.size - 2)
        stderr = math.sqrt(s2 / float(np.sum((lx - lx.mean()) ** 2)))
    else:
        stderr = float("nan")
    return SlopeFit(float(slope), stderr, float(intercept), int(x.size))


def slopes_by_algorithm(rows, y: str = "mean_mse") -> dict:
    """Fit per ``(algorithm, topology)``; groups with fewer than two rows map to ``None``."""
    groups: dict = {}
    for row in rows:
        if getattr(row, y) is None:
            continue
        groups.setdefault((row.algorithm, row.topology), []).append(row)
    out = {}
    for key, grp in groups.items():
        if len(grp) < 2:
            out[key] = None
        else:
            out[key] = fit_loglog_slope([r.x_value for r in grp], [getattr(r, y) for r in grp])
    return out
