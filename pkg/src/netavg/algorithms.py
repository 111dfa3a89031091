"""SDA (dual accelerated with Polyak-Ruppert averaging), DSG and D-MASG.

All runners are vectorized over Monte Carlo replications: state arrays carry
a leading replication axis ``(R, N, n)`` and each replication draws from its
own keyed stream, so ``run_*_batch(..., replications=[r])`` and the batch
containing ``r`` produce identical numbers for replication ``r``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .gossip import GossipSpec, WeightMatrix, kappa_tilde

__all__ = [
    "SdaParams",
    "DmasgParams",
    "RunResult",
    "BatchResult",
    "BurnInWarning",
    "theorem1_params",
    "dmasg_schedule",
    "dmasg_single_stage",
    "run_sda",
    "run_sda_batch",
    "sda_iterates",
    "run_dsg",
    "run_dsg_batch",
    "run_dmasg",
    "run_dmasg_batch",
    "trace_points",
]

DENSE_TRACE_LIMIT = 10_000


class BurnInWarning(UserWarning):
    """Burn-in shorter than k*: the finite-time guarantee's precondition fails."""


@dataclass(frozen=True)
class SdaParams:
    t_total: int
    t_burn: int
    eta: float
    zeta: float
    batch_sizes: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.t_total < 1:
            raise ValueError(f"t_total must be positive, got {self.t_total}")
        if not 0 <= self.t_burn <= self.t_total - 1:
            raise ValueError(f"need 0 <= t_burn <= t_total - 1, got t_burn={self.t_burn}, t_total={self.t_total}")
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not self.zeta >= 0:
            raise ValueError(f"zeta must be nonnegative, got {self.zeta}")
        if self.batch_sizes is not None:
            sizes = tuple(int(m) for m in self.batch_sizes)
            if len(sizes) != self.t_total or min(sizes) < 1:
                raise ValueError("batch_sizes needs one positive entry per iteration")
            object.__setattr__(self, "batch_sizes", sizes)

    def batch_size(self, t: int) -> int:
        return 1 if self.batch_sizes is None else self.batch_sizes[t]

    @property
    def samples_per_node(self) -> int:
        return self.t_total if self.batch_sizes is None else sum(self.batch_sizes)


def theorem1_params(gossip: GossipSpec, t_total: int, batch_sizes=None) -> SdaParams:
    """Step ``1 / lambda_1(L)``, momentum ``(sqrt(k)-1)/(sqrt(k)+1)``, burn-in ``floor(T/2)``.

    Emits :class:`BurnInWarning` when the burn-in is shorter than ``k*``.
    """
    from .bounds import compute_k_star

    if t_total < 1:
        raise ValueError(f"t_total must be positive, got {t_total}")
    root = math.sqrt(gossip.kappa_l)
    params = SdaParams(
        t_total=t_total,
        t_burn=t_total // 2,
        eta=1.0 / gossip.lambda_max,
        zeta=(root - 1.0) / (root + 1.0),
        batch_sizes=batch_sizes,
    )
    k_star = compute_k_star(gossip.kappa_l).value
    if params.t_burn < k_star:
        warnings.warn(
            f"burn-in {params.t_burn} < k* = {k_star} (kappa={gossip.kappa_l:.4g})",
            BurnInWarning,
            stacklevel=2,
        )
    return params


@dataclass(frozen=True)
class DmasgParams:
    """Multistage Nesterov schedule: stage ``k`` runs ``t_k`` steps of size ``alpha_k``."""

    stage_lengths: tuple[int, ...]
    stage_steps: tuple[float, ...]
    stage_momenta: tuple[float, ...]

    def __post_init__(self):
        k = len(self.stage_lengths)
        if k == 0 or len(self.stage_steps) != k or len(self.stage_momenta) != k:
            raise ValueError("stage lengths, steps and momenta must be nonempty and aligned")
        if min(self.stage_lengths) < 1:
            raise ValueError("every stage needs at least one iteration")
        if min(self.stage_steps) <= 0:
            raise ValueError("stage step sizes must be positive")
        if not all(0 <= b < 1 for b in self.stage_momenta):
            raise ValueError("stage momenta must lie in [0, 1)")

    @property
    def n_stages(self) -> int:
        return len(self.stage_lengths)

    @property
    def t_total(self) -> int:
        return sum(self.stage_lengths)


def _momentum(alpha):
    r = math.sqrt(alpha)
    return (1.0 - r) / (1.0 + r)


def dmasg_schedule(shifted: WeightMatrix, n_stages: int) -> DmasgParams:
    """Stage lengths ``2^k ceil(7 sqrt(kt) ln 2)`` for k >= 2 and ``t_1`` = their sum.

    Steps are ``lambda_min(W1) / 2`` for stage 1 and ``lambda_min(W1) / 2^(2k+1)``
    afterwards; momenta ``(1 - sqrt(a)) / (1 + sqrt(a))``. Total length is ``2 t_1``.
    """
    if n_stages < 1:
        raise ValueError("need at least one stage")
    lam = shifted.lambda_min
    unit = math.ceil(7.0 * math.sqrt(kappa_tilde(shifted)) * math.log(2.0))
    later = [2**k * unit for k in range(2, n_stages + 1)]
    lengths = [sum(later) if later else unit] + later
    steps = [lam / 2.0] + [lam / 2 ** (2 * k + 1) for k in range(2, n_stages + 1)]
    return DmasgParams(tuple(lengths), tuple(steps), tuple(_momentum(a) for a in steps))


def dmasg_single_stage(shifted: WeightMatrix, t_total: int) -> DmasgParams:
    """One stage of length ``T`` with ``alpha = lambda_min(W1) / 2``."""
    alpha = shifted.lambda_min / 2.0
    return DmasgParams((int(t_total),), (alpha,), (_momentum(alpha),))


def trace_points(t_total: int, stride: int | None = None) -> np.ndarray:
    """Iterations at which the error trace is recorded.

    Every ``stride``-th iteration (the last always included); with no stride,
    every iteration up to 10^4 and a ~200-point logarithmic grid beyond.
    """
    if stride is None:
        if t_total <= DENSE_TRACE_LIMIT:
            return np.arange(t_total)
        pts = np.unique(np.geomspace(1, t_total, 200).astype(int) - 1)
    else:
        pts = np.arange(0, t_total, max(1, int(stride)))
    return np.union1d(pts, [t_total - 1])


@dataclass
class BatchResult:
    """Outcome of a batch of replications.

    Attributes:
        final_estimates: ``(R, N, n)`` node estimates at the end of the run.
        final_errors: ``(R,)`` values of ``sum_i ||theta_hat_i - mu_bar||^2``.
        trace: ``(R, K)`` squared errors at ``trace_iterations``. For SDA the
            entry at ``t`` measures the raw iterate ``theta_t``; for DSG and
            D-MASG it measures the estimate held after ``t + 1`` iterations.
        trace_iterations: ``(K,)`` iteration indices of the trace columns.
    """

    algorithm_tag: str
    replications: np.ndarray
    final_estimates: np.ndarray
    final_errors: np.ndarray
    trace: np.ndarray
    trace_iterations: np.ndarray
    samples_used_per_node: int
    target: np.ndarray = field(repr=False)

    def __getitem__(self, k: int) -> "RunResult":
        return RunResult(
            algorithm_tag=self.algorithm_tag,
            replication=int(self.replications[k]),
            final_estimates=self.final_estimates[k],
            final_error=float(self.final_errors[k]),
            trace=self.trace[k],
            trace_iterations=self.trace_iterations,
            samples_used_per_node=self.samples_used_per_node,
        )

    @property
    def mean_error(self) -> float:
        return float(np.mean(self.final_errors))

    @property
    def std_error(self) -> float:
        n = self.final_errors.size
        return float(np.std(self.final_errors, ddof=1) / math.sqrt(n)) if n > 1 else 0.0


@dataclass
class RunResult:
    algorithm_tag: str
    replication: int
    final_estimates: np.ndarray
    final_error: float
    trace: np.ndarray
    trace_iterations: np.ndarray
    samples_used_per_node: int


def _check_source(n_nodes, source):
    if source.n_nodes != n_nodes:
        raise ValueError(f"network has {n_nodes} nodes but observations cover {source.n_nodes}")


def _sq_error(state, target):
    return np.sum((state - target) ** 2, axis=(1, 2))


def _observe(source, t, reps, m):
    obs = source.draw(t, reps)
    for lane in range(1, m):
        obs = obs + source.draw(t, reps, lane)
    return obs / m if m > 1 else obs


@dataclass
class SdaState:
    """Snapshot yielded by :func:`sda_iterates` at iteration ``t`` (before the update)."""

    t: int
    x: np.ndarray
    y: np.ndarray
    y_prev: np.ndarray
    observation: np.ndarray
    theta: np.ndarray


def sda_iterates(gossip: GossipSpec, source, params: SdaParams, replications) -> Iterator[SdaState]:
    """Step through SDA, yielding the state of every iteration ``t = 0..T-1``."""
    _check_source(gossip.n_nodes, source)
    reps = np.atleast_1d(np.asarray(replications, dtype=np.int64))
    l = gossip.l
    shape = (reps.size, source.n_nodes, source.dim)
    x = np.zeros(shape)
    y = np.zeros(shape)
    y_prev = np.zeros(shape)
    eta, zeta = params.eta, params.zeta
    for t in range(params.t_total):
        obs = _observe(source, t, reps, params.batch_size(t))
        theta = x + obs
        yield SdaState(t, x, y, y_prev, obs, theta)
        y_next = x - eta * np.matmul(l, theta)
        x = y_next + zeta * (y_next - y)
        y_prev, y = y, y_next


def run_sda_batch(gossip: GossipSpec, source, params: SdaParams, replications, stride=None) -> BatchResult:
    """Run SDA for several replications at once."""
    reps = np.atleast_1d(np.asarray(replications, dtype=np.int64))
    target = source.means.mean(axis=0)
    points = trace_points(params.t_total, stride)
    record = np.zeros(params.t_total, dtype=bool)
    record[points] = True
    trace = np.empty((reps.size, points.size))
    acc = np.zeros((reps.size, source.n_nodes, source.dim))
    col = 0
    for state in sda_iterates(gossip, source, params, reps):
        if state.t >= params.t_burn:
            acc += state.theta
        if record[state.t]:
            trace[:, col] = _sq_error(state.theta, target)
            col += 1
    estimates = acc / (params.t_total - params.t_burn)
    return BatchResult("sda", reps, estimates, _sq_error(estimates, target), trace, points,
                       params.samples_per_node, target)


def run_sda(gossip: GossipSpec, source, params: SdaParams, replication: int = 0, stride=None) -> RunResult:
    return run_sda_batch(gossip, source, params, [replication], stride)[0]


def run_dsg_batch(weights: WeightMatrix, source, t_total: int, replications, stride=None,
                  step_sizes=None) -> BatchResult:
    """DSG with ``eta_t = 1/(t+1)`` unless ``step_sizes`` is given."""
    _check_source(weights.n_nodes, source)
    if t_total < 1:
        raise ValueError("t_total must be positive")
    reps = np.atleast_1d(np.asarray(replications, dtype=np.int64))
    target = source.means.mean(axis=0)
    points = trace_points(t_total, stride)
    record = np.zeros(t_total, dtype=bool)
    record[points] = True
    trace = np.empty((reps.size, points.size))
    w = weights.w
    est = np.zeros((reps.size, source.n_nodes, source.dim))
    col = 0
    for t in range(t_total):
        step = 1.0 / (t + 1) if step_sizes is None else step_sizes[t]
        local = est + step * (source.draw(t, reps) - est)
        est = np.matmul(w, local)
        if record[t]:
            trace[:, col] = _sq_error(est, target)
            col += 1
    return BatchResult("dsg", reps, est, _sq_error(est, target), trace, points, t_total, target)


def run_dsg(weights: WeightMatrix, source, t_total: int, replication: int = 0, stride=None) -> RunResult:
    return run_dsg_batch(weights, source, t_total, [replication], stride)[0]


def run_dmasg_batch(shifted: WeightMatrix, source, params: DmasgParams, replications, stride=None) -> BatchResult:
    """Multistage distributed Nesterov method on ``sum_i ||theta_i - mu_i||^2 / 2``.

    Within a stage: ``x+ = W1 y - alpha (y - R_t)``, ``y+ = x+ + beta (x+ - x)``.
    Each stage restarts its momentum from the previous stage's last ``x``.
    """
    _check_source(shifted.n_nodes, source)
    if shifted.lambda_min <= 0:
        raise ValueError("D-MASG needs positive definite shifted weights")
    reps = np.atleast_1d(np.asarray(replications, dtype=np.int64))
    target = source.means.mean(axis=0)
    t_total = params.t_total
    points = trace_points(t_total, stride)
    record = np.zeros(t_total, dtype=bool)
    record[points] = True
    trace = np.empty((reps.size, points.size))
    w = shifted.w
    x = np.zeros((reps.size, source.n_nodes, source.dim))
    t = 0
    col = 0
    for length, alpha, beta in zip(params.stage_lengths, params.stage_steps, params.stage_momenta):
        y = x
        for _ in range(length):
            x_next = np.matmul(w, y) - alpha * (y - source.draw(t, reps))
            y = x_next + beta * (x_next - x)
            x = x_next
            if record[t]:
                trace[:, col] = _sq_error(x, target)
                col += 1
            t += 1
    return BatchResult("dmasg", reps, x, _sq_error(x, target), trace, points, t_total, target)


def run_dmasg(shifted: WeightMatrix, source, params: DmasgParams, replication: int = 0, stride=None) -> RunResult:
    return run_dmasg_batch(shifted, source, params, [replication], stride)[0]
