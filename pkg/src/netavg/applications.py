"""Distributed linear parameter estimation and decentralized policy evaluation.

Both pipelines reduce to network averaging: sensors average ``A_i^T A_i`` and
``A_i^T Y_{i,t}``; agents average their reward observations and plug the
estimate, together with an empirical transition matrix, into the Bellman
equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import _keyed
from .algorithms import SdaParams, run_sda_batch, theorem1_params
from .bounds import k_star_envelope, spectral_norm
from .gossip import GossipSpec
from .observation import ObservationModel

__all__ = [
    "SensingInstance",
    "SensingObservations",
    "SensingResult",
    "PreconditionError",
    "random_sensing_instance",
    "run_sensing",
    "sensing_deterministic_bound",
    "MrpInstance",
    "SampleTransitionMatrix",
    "PolicyEvalResult",
    "random_mrp",
    "value_function",
    "sample_transition",
    "run_policy_eval",
]


class PreconditionError(RuntimeError):
    """The matrix-averaging phase was too short for the local matrices to be usable."""


@dataclass(frozen=True)
class SensingInstance:
    """``Y_{i,t} = A_i beta* + eps_{i,t}`` with diagonal noise covariance per sensor.

    Attributes:
        sensor_matrices: One ``(m_i, d)`` matrix per node.
        beta_star: Ground-truth parameter of length ``d``.
        noise_stds: One length-``m_i`` vector of noise standard deviations per node.
    """

    sensor_matrices: tuple
    beta_star: np.ndarray
    noise_stds: tuple

    def __post_init__(self):
        mats = tuple(np.atleast_2d(np.asarray(a, dtype=float)) for a in self.sensor_matrices)
        beta = np.asarray(self.beta_star, dtype=float).ravel()
        stds = tuple(np.broadcast_to(np.asarray(s, dtype=float), (a.shape[0],)).copy()
                     for s, a in zip(self.noise_stds, mats))
        if len(stds) != len(mats):
            raise ValueError("need one noise vector per sensor")
        if any(a.shape[1] != beta.size for a in mats):
            raise ValueError("sensor matrices must have d columns")
        object.__setattr__(self, "sensor_matrices", mats)
        object.__setattr__(self, "beta_star", beta)
        object.__setattr__(self, "noise_stds", stds)
        vals = np.linalg.eigvalsh(self.a_bar)
        if vals[0] <= 1e-8 * vals[-1]:
            raise ValueError("sum_i A_i^T A_i is (numerically) singular")

    @property
    def n_nodes(self) -> int:
        return len(self.sensor_matrices)

    @property
    def dim_d(self) -> int:
        return self.beta_star.size

    @property
    def gram(self) -> np.ndarray:
        """``(N, d, d)`` stack of ``A_i^T A_i``."""
        return np.stack([a.T @ a for a in self.sensor_matrices])

    @property
    def a_bar(self) -> np.ndarray:
        return self.gram.mean(axis=0)

    @property
    def means(self) -> np.ndarray:
        """``mu_i = A_i^T A_i beta*`` as an ``(N, d)`` array."""
        return self.gram @ self.beta_star

    @property
    def variances(self) -> np.ndarray:
        """Diagonal of ``A_i^T Sigma_i A_i`` per node."""
        return np.stack([(a**2 * s[:, None] ** 2).sum(axis=0)
                         for a, s in zip(self.sensor_matrices, self.noise_stds)])


def random_sensing_instance(n_nodes: int, dim_d: int, rows_per_sensor: int = 1,
                            noise_std: float = 0.0, seed: int = 0) -> SensingInstance:
    """Gaussian sensor matrices and parameter, retried until the Gram average is well posed."""
    rng = np.random.default_rng(seed)
    for _ in range(100):
        mats = [rng.standard_normal((rows_per_sensor, dim_d)) for _ in range(n_nodes)]
        beta = rng.standard_normal(dim_d)
        try:
            return SensingInstance(tuple(mats), beta, tuple(np.full(rows_per_sensor, noise_std)
                                                             for _ in range(n_nodes)))
        except ValueError:
            continue
    raise ValueError("could not draw a well-posed sensing instance")


class SensingObservations:
    """``R_{i,t} = A_i^T Y_{i,t}`` with keyed sensor noise."""

    def __init__(self, instance: SensingInstance, master_seed: int = 0):
        self.instance = instance
        self.master_seed = master_seed
        self.means = instance.means
        self.variances = instance.variances
        self.n_nodes = instance.n_nodes
        self.dim = instance.dim_d
        self._noiseless = not any(np.any(s) for s in instance.noise_stds)

    def draw(self, t, replications, lane=0):
        reps = np.atleast_1d(np.asarray(replications, dtype=np.int64))
        out = np.broadcast_to(self.means, (reps.size,) + self.means.shape).copy()
        if self._noiseless:
            return out
        for i, (a, s) in enumerate(zip(self.instance.sensor_matrices, self.instance.noise_stds)):
            keys = _keyed.key_of(self.master_seed, _keyed.STREAM_SENSOR_NOISE,
                                 reps[:, None], i, np.arange(a.shape[0])[None, :], t, lane)
            eps = s * _keyed.standard_normal(keys)
            out[:, i, :] += eps @ a
        return out


@dataclass
class SensingResult:
    a_hat: np.ndarray
    mu_hat: np.ndarray
    beta_hat: np.ndarray
    error: float
    precondition_ratio: float

    def decomposition(self, instance: SensingInstance):
        """Split ``beta_hat_i - beta*`` into the matrix-error and mean-error parts."""
        a_bar_inv = np.linalg.inv(instance.a_bar)
        mu_bar = instance.means.mean(axis=0)
        inv_gap = np.linalg.inv(self.a_hat) - a_bar_inv
        matrix_part = np.einsum("ijk,ik->ij", inv_gap, self.mu_hat)
        mean_part = (self.mu_hat - mu_bar) @ a_bar_inv.T
        return matrix_part, mean_part


def run_sensing(instance: SensingInstance, gossip: GossipSpec, t_matrix: int, t_mean: int,
                seed: int = 0, replication: int = 0) -> SensingResult:
    """Two SDA phases then a local solve ``A_hat_i beta_i = mu_hat_i``.

    Phase one averages the deterministic ``A_i^T A_i`` over ``t_matrix``
    iterations and keeps the last iterate; phase two averages ``A_i^T Y_{i,t}``
    for ``t_mean`` iterations with the accelerated schedule.

    Raises:
        PreconditionError: ``||A_bar^-1|| ||A_hat_i - A_bar|| > 1/2`` for some node.
    """
    n, d = instance.n_nodes, instance.dim_d
    gram = instance.gram
    flat = ObservationModel(gram.reshape(n, d * d), np.zeros((n, d * d)), master_seed=seed)
    root = math.sqrt(gossip.kappa_l)
    phase1 = SdaParams(t_total=t_matrix, t_burn=t_matrix - 1, eta=1.0 / gossip.lambda_max,
                       zeta=(root - 1.0) / (root + 1.0))
    a_hat = run_sda_batch(gossip, flat, phase1, [replication], stride=t_matrix).final_estimates[0]
    a_hat = a_hat.reshape(n, d, d)
    a_hat = 0.5 * (a_hat + np.transpose(a_hat, (0, 2, 1)))

    a_bar = instance.a_bar
    inv_norm = spectral_norm(np.linalg.inv(a_bar))
    ratio = max(inv_norm * spectral_norm(a_hat[i] - a_bar) for i in range(n))
    if ratio > 0.5:
        raise PreconditionError(
            f"||A_bar^-1|| ||A_hat_i - A_bar|| reaches {ratio:.3g} > 1/2; increase t_matrix ({t_matrix})"
        )

    source = SensingObservations(instance, seed)
    mu_hat = run_sda_batch(gossip, source, theorem1_params(gossip, t_mean), [replication],
                           stride=t_mean).final_estimates[0]
    beta_hat = np.empty((n, d))
    for i in range(n):
        lu = scipy.linalg.lu_factor(a_hat[i])
        beta_hat[i] = scipy.linalg.lu_solve(lu, mu_hat[i])
    error = float(np.sum((beta_hat - instance.beta_star) ** 2))
    return SensingResult(a_hat, mu_hat, beta_hat, error, ratio)


def sensing_deterministic_bound(instance: SensingInstance, gossip: GossipSpec,
                                t_matrix: int, t_mean: int) -> dict:
    """Noise-free error bound for :func:`run_sensing` with explicit constants.

    The last iterate of phase one contracts every coordinate's disagreement by
    the envelope ``(1 + k/(sqrt(kappa)+1)) (1 - 1/sqrt(kappa))^k``, so
    ``sum_i ||A_hat_i - A_bar||^2 <= env(T'-1)^2 sum_i ||A_i^T A_i - A_bar||_F^2``.
    Phase two is bounded by the SDA bias term. Combining them through the
    inverse-perturbation inequality (which costs a factor 4 under the
    precondition) gives ``matrix_term + mean_term + cross_term``.
    """
    kappa = gossip.kappa_l
    a_bar = instance.a_bar
    inv_norm = spectral_norm(np.linalg.inv(a_bar))
    mu_bar = instance.means.mean(axis=0)
    gram_energy = float(np.sum((instance.gram - a_bar) ** 2))
    env = float(k_star_envelope(kappa, t_matrix - 1))
    a_gap = env**2 * gram_energy
    means = instance.means
    mean_gap = 16.0 * kappa / t_mean**2 * math.exp(-t_mean / (2.0 * math.sqrt(kappa))) \
        * float(np.sum((means - mu_bar) ** 2))
    inv_gap = 4.0 * inv_norm**4 * a_gap
    matrix_term = 4.0 * float(mu_bar @ mu_bar) * inv_gap
    mean_term = 2.0 * inv_norm**2 * mean_gap
    cross_term = 4.0 * inv_gap * mean_gap
    return {
        "matrix_term": matrix_term,
        "mean_term": mean_term,
        "cross_term": cross_term,
        "total": matrix_term + mean_term + cross_term,
    }


@dataclass(frozen=True)
class MrpInstance:
    """Markov reward process shared by ``N`` agents with private reward means.

    Attributes:
        transition: ``(n, n)`` row-stochastic matrix ``P``.
        rewards: ``(N, n)`` per-agent mean rewards ``r_i``.
        reward_stds: ``(N, n)`` reward noise standard deviations.
        gamma: Discount factor in ``[0, 1)``.
    """

    transition: np.ndarray
    rewards: np.ndarray
    reward_stds: np.ndarray
    gamma: float

    def __post_init__(self):
        p = np.asarray(self.transition, dtype=float)
        r = np.array(self.rewards, dtype=float, ndmin=2)
        s = np.broadcast_to(np.asarray(self.reward_stds, dtype=float), r.shape).copy()
        if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] != r.shape[1]:
            raise ValueError("transition must be n x n and rewards N x n")
        if np.any(p < 0) or np.max(np.abs(p.sum(axis=1) - 1.0)) > 1e-12:
            raise ValueError("transition matrix must be row-stochastic")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        object.__setattr__(self, "transition", p)
        object.__setattr__(self, "rewards", r)
        object.__setattr__(self, "reward_stds", s)

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_agents(self) -> int:
        return self.rewards.shape[0]

    @property
    def r_bar(self) -> np.ndarray:
        return self.rewards.mean(axis=0)

    def reward_model(self, seed: int) -> ObservationModel:
        return ObservationModel(self.rewards, self.reward_stds, master_seed=seed)


def random_mrp(n_states: int, n_agents: int, gamma: float, reward_std: float = 0.0,
               seed: int = 0) -> MrpInstance:
    """Dirichlet(1) transition rows and Uniform[0, 1] agent rewards."""
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(n_states), size=n_states)
    p /= p.sum(axis=1, keepdims=True)
    rewards = rng.uniform(0.0, 1.0, size=(n_agents, n_states))
    return MrpInstance(p, rewards, np.full((n_agents, n_states), reward_std), gamma)


def _bellman_solve(p, gamma, r):
    n = p.shape[0]
    lu = scipy.linalg.lu_factor(np.eye(n) - gamma * p)
    return scipy.linalg.lu_solve(lu, r)


def value_function(instance: MrpInstance) -> np.ndarray:
    """``J* = (I - gamma P)^-1 r_bar``."""
    return _bellman_solve(instance.transition, instance.gamma, instance.r_bar)


@dataclass(frozen=True)
class SampleTransitionMatrix:
    p_hat: np.ndarray
    t_samples: int


def sample_transition(instance: MrpInstance, t_samples: int, seed: int = 0,
                      replication: int = 0) -> SampleTransitionMatrix:
    """Average of ``T`` one-hot matrices, row ``j`` drawn from ``P(j, .)``."""
    if t_samples < 1:
        raise ValueError("t_samples must be positive")
    n = instance.n_states
    keys = _keyed.key_of(seed, _keyed.STREAM_TRANSITION, replication,
                         np.arange(t_samples)[:, None], np.arange(n)[None, :])
    u = _keyed.uniform(keys)
    cdf = np.cumsum(instance.transition, axis=1)
    nxt = np.empty((t_samples, n), dtype=np.int64)
    for j in range(n):
        nxt[:, j] = np.minimum(np.searchsorted(cdf[j], u[:, j], side="right"), n - 1)
        # never land on a zero-probability state through cdf rounding
        bad = instance.transition[j, nxt[:, j]] == 0
        if np.any(bad):
            support = np.flatnonzero(instance.transition[j])
            nxt[bad, j] = support[np.searchsorted(support, nxt[bad, j]).clip(max=support.size - 1)]
    counts = np.zeros((n, n))
    np.add.at(counts, (np.broadcast_to(np.arange(n), nxt.shape), nxt), 1.0)
    return SampleTransitionMatrix(counts / t_samples, t_samples)


@dataclass
class PolicyEvalResult:
    j_hat: np.ndarray
    r_hat: np.ndarray
    p_hat: np.ndarray
    error: float

    def decomposition(self, instance: MrpInstance):
        """``(I - g P_hat)^-1 (r_hat_i - r_bar)`` and ``(I - g P_hat)^-1 r_bar - J*``."""
        g = instance.gamma
        noise = np.stack([_bellman_solve(self.p_hat, g, r - instance.r_bar) for r in self.r_hat])
        model = _bellman_solve(self.p_hat, g, instance.r_bar) - value_function(instance)
        return noise, model


def run_policy_eval(instance: MrpInstance, gossip: GossipSpec, t_total: int, seed: int = 0,
                    replication: int = 0, p_hat=None) -> PolicyEvalResult:
    """Average rewards with SDA, then solve the Bellman equation per agent.

    The empirical transition matrix is built from the same ``T`` steps of the
    generative model unless ``p_hat`` is supplied.
    """
    rewards = instance.reward_model(seed)
    r_hat = run_sda_batch(gossip, rewards, theorem1_params(gossip, t_total), [replication],
                          stride=t_total).final_estimates[0]
    if p_hat is None:
        p_hat = sample_transition(instance, t_total, seed, replication).p_hat
    lu = scipy.linalg.lu_factor(np.eye(instance.n_states) - instance.gamma * p_hat)
    j_hat = np.stack([scipy.linalg.lu_solve(lu, r) for r in r_hat])
    j_star = value_function(instance)
    error = float(np.max(np.abs(j_hat - j_star)))
    return PolicyEvalResult(j_hat, r_hat, p_hat, error)
