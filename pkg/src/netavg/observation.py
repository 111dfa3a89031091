"""Online stochastic observations ``R_{i,t}`` and problem-instance ground truth.

Any object with ``n_nodes``, ``dim``, ``means`` and a ``draw(t, replications,
lane=0)`` method returning an array of shape ``(len(replications), N, dim)``
can feed the algorithms; :class:`ObservationModel` is the Gaussian one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _keyed

__all__ = ["ObservationModel", "ProblemInstance", "uniform_means_instance", "sample"]


@dataclass(frozen=True)
class ObservationModel:
    """Independent Gaussian observations with diagonal covariance.

    The draw for ``(replication r, node i, time t, coordinate j, batch lane l)``
    depends only on ``(master_seed, r, i, j + coord_offset, t, l)``.

    Attributes:
        means: ``(N, n)`` array of per-node mean vectors.
        std_devs: ``(N, n)`` array of per-coordinate standard deviations.
        master_seed: Root of every random stream.
        coord_offset: Global index of coordinate 0; lets a single-coordinate
            slice reproduce the draws of a wider model.
        stream: Stream tag, separates unrelated consumers of one seed.
    """

    means: np.ndarray
    std_devs: np.ndarray
    master_seed: int = 0
    coord_offset: int = 0
    stream: int = _keyed.STREAM_OBSERVATION
    _base: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        means = np.array(self.means, dtype=float, ndmin=2)
        stds = np.broadcast_to(np.asarray(self.std_devs, dtype=float), means.shape).copy()
        if not np.all(np.isfinite(means)):
            raise ValueError("means must be finite")
        if np.any(stds < 0) or not np.all(np.isfinite(stds)):
            raise ValueError("standard deviations must be finite and nonnegative")
        means.setflags(write=False)
        stds.setflags(write=False)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "std_devs", stds)

    @property
    def n_nodes(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def variances(self) -> np.ndarray:
        return self.std_devs**2

    @property
    def target(self) -> np.ndarray:
        return self.means.mean(axis=0)

    @property
    def is_deterministic(self) -> bool:
        return not np.any(self.std_devs)

    def coordinate(self, j: int) -> "ObservationModel":
        """One-dimensional model holding coordinate ``j`` with matched draws."""
        return ObservationModel(
            self.means[:, j : j + 1],
            self.std_devs[:, j : j + 1],
            self.master_seed,
            self.coord_offset + j,
            self.stream,
        )

    def _slot_keys(self, replications):
        reps = tuple(int(r) for r in replications)
        base = self._base.get(reps)
        if base is None:
            r = np.asarray(reps, dtype=np.int64)[:, None, None]
            i = np.arange(self.n_nodes)[None, :, None]
            j = (np.arange(self.dim) + self.coord_offset)[None, None, :]
            base = _keyed.key_of(self.master_seed, self.stream, r, i, j)
            if len(self._base) > 8:
                self._base.clear()
            self._base[reps] = base
        return base

    def noise(self, t: int, replications, lane: int = 0) -> np.ndarray:
        """Standard normal block of shape ``(R, N, n)`` for time ``t``."""
        keys = _keyed.fold(_keyed.fold(self._slot_keys(replications), t), lane)
        return _keyed.standard_normal(keys)

    def draw(self, t: int, replications, lane: int = 0) -> np.ndarray:
        if self.is_deterministic:
            return np.broadcast_to(self.means, (len(replications),) + self.means.shape).copy()
        return self.means + self.std_devs * self.noise(t, replications, lane)


def sample(model: ObservationModel, node: int, t: int, replication: int = 0) -> np.ndarray:
    """Single observation vector ``R_{node, t}`` of one replication."""
    if not 0 <= node < model.n_nodes:
        raise IndexError(f"node {node} outside 0..{model.n_nodes - 1}")
    return model.draw(t, [replication])[0, node]


@dataclass(frozen=True)
class ProblemInstance:
    """An observation model together with the quantities the bounds need."""

    model: ObservationModel

    @property
    def target(self) -> np.ndarray:
        return self.model.target

    @property
    def bias_energy(self) -> float:
        """``sum_i ||mu_i - mu_bar||^2``."""
        return float(np.sum((self.model.means - self.target) ** 2))

    @property
    def means(self) -> np.ndarray:
        return self.model.means

    @property
    def variances(self) -> np.ndarray:
        return self.model.variances


def uniform_means_instance(n_nodes: int, dim: int, b: float, sigma: float, seed: int) -> ProblemInstance:
    """Means i.i.d. Uniform[0, b] (from ``default_rng(seed)``), all std devs ``sigma``."""
    if b < 0 or sigma < 0:
        raise ValueError("b and sigma must be nonnegative")
    means = np.random.default_rng(seed).uniform(0.0, b, size=(n_nodes, dim)) if b > 0 else np.zeros((n_nodes, dim))
    stds = np.full((n_nodes, dim), float(sigma))
    return ProblemInstance(ObservationModel(means, stds, master_seed=seed))
