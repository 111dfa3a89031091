"""Weight matrices, gossip matrices and their spectra."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .topology import Topology

__all__ = [
    "EigenDecompositionError",
    "SpectralError",
    "WeightMatrix",
    "GossipSpec",
    "symmetric_eigendecomposition",
    "metropolis_hastings",
    "gossip_from_weights",
    "shifted_weights_dmasg",
    "matrix_to_csv",
    "kappa_tilde",
    "gossip_from_matrix",
]

SYMMETRY_TOL = 1e-10
ZERO_EIG_TOL = 1e-10
MIN_SPECTRAL_GAP = 1e-12


class EigenDecompositionError(RuntimeError):
    pass


class SpectralError(ValueError):
    """Spectrum unusable for the requested construction (e.g. no spectral gap)."""


def symmetric_eigendecomposition(m):
    """Eigenvalues (descending) and orthogonal eigenvectors of a symmetric matrix.

    Columns of ``q`` are sign-normalized so that their first entry that is not
    negligible is positive, which makes the output reproducible.

    Raises:
        ValueError: ``m`` is not square or not symmetric within 1e-10.
        EigenDecompositionError: the LAPACK driver failed to converge.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    asym = np.max(np.abs(m - m.T)) if m.size else 0.0
    if asym > SYMMETRY_TOL:
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3e})")
    sym = 0.5 * (m + m.T)
    try:
        vals, vecs = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:
        fro = np.linalg.norm(sym)
        raise EigenDecompositionError(
            f"eigensolver did not converge for {m.shape[0]}x{m.shape[0]} matrix "
            f"(Frobenius norm {fro:.3e}, max |entry| {np.max(np.abs(sym)):.3e})"
        ) from exc
    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    vecs = vecs[:, order]
    for k in range(vecs.shape[1]):
        col = vecs[:, k]
        big = np.flatnonzero(np.abs(col) > 1e-10 * max(np.max(np.abs(col)), 1e-300))
        if big.size and col[big[0]] < 0:
            vecs[:, k] = -col
    return vals, vecs


@dataclass(frozen=True)
class WeightMatrix:
    """Symmetric mixing matrix ``W`` with unit row sums.

    ``eigs_desc_by_magnitude`` lists the eigenvalues sorted by decreasing
    absolute value (``lambda_(1) = 1`` first); ``kappa_w`` is
    ``1 / (1 - |lambda_(2)|)``.
    """

    w: np.ndarray
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)

    @classmethod
    def from_array(cls, w) -> "WeightMatrix":
        w = np.array(w, dtype=float)
        vals, vecs = symmetric_eigendecomposition(w)
        w.setflags(write=False)
        return cls(w, vals, vecs)

    @property
    def n_nodes(self) -> int:
        return self.w.shape[0]

    @property
    def eigs_desc_by_magnitude(self) -> np.ndarray:
        order = np.argsort(-np.abs(self.eigenvalues), kind="stable")
        return self.eigenvalues[order]

    @property
    def second_largest_magnitude(self) -> float:
        mags = self.eigs_desc_by_magnitude
        return float(abs(mags[1])) if mags.size > 1 else 0.0

    @property
    def kappa_w(self) -> float:
        gap = 1.0 - self.second_largest_magnitude
        if gap <= MIN_SPECTRAL_GAP:
            raise SpectralError("|lambda_(2)(W)| is 1: W does not mix")
        return 1.0 / gap

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[-1])

    def check(self, support=None) -> None:
        """Assert the structural properties; raises AssertionError on failure."""
        w = self.w
        n = w.shape[0]
        assert np.array_equal(w, w.T), "W not exactly symmetric"
        assert np.max(np.abs(w.sum(axis=1) - 1.0)) <= 1e-12, "row sums differ from 1"
        if support is not None:
            allowed = support.astype(bool) | np.eye(n, dtype=bool)
            assert not np.any(w[~allowed]), "W has entries outside the graph"
        rho = np.max(np.abs(np.linalg.eigvalsh(w - np.full((n, n), 1.0 / n))))
        assert rho < 1.0, "spectral radius of W - ee^T/N is not below 1"


def metropolis_hastings(topology: Topology) -> WeightMatrix:
    """Metropolis-Hastings weights: ``1 / (max(deg_i, deg_j) + 1)`` on edges."""
    n = topology.n_nodes
    deg = topology.degrees()
    w = np.zeros((n, n))
    for u, v in topology.edges:
        w[u, v] = w[v, u] = 1.0 / (max(deg[u], deg[v]) + 1)
    # diagonal absorbs the remainder so each row sums to one
    w[np.diag_indices(n)] = 1.0 - w.sum(axis=1)
    return WeightMatrix.from_array(w)


@dataclass(frozen=True)
class GossipSpec:
    """Gossip matrix ``L`` (symmetric PSD, kernel = constants) and its spectrum.

    ``eigenvalues_desc[0]`` is ``lambda_1(L)``; ``eigenvalues_desc[-2]`` is
    ``lambda_{N-1}(L)``, the smallest nonzero one. The smallest eigenvalue is
    clamped to exactly zero.
    """

    l: np.ndarray
    eigenvalues_desc: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return self.l.shape[0]

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues_desc[0])

    @property
    def lambda_min_nonzero(self) -> float:
        return float(self.eigenvalues_desc[-2])

    @property
    def kappa_l(self) -> float:
        return self.lambda_max / self.lambda_min_nonzero

    @property
    def sqrt_l(self) -> np.ndarray:
        q = self.eigenvectors
        return (q * np.sqrt(np.clip(self.eigenvalues_desc, 0.0, None))) @ q.T

    def scaled(self, c: float) -> "GossipSpec":
        return gossip_from_matrix(c * self.l)


def gossip_from_matrix(l) -> GossipSpec:
    """Wrap any symmetric PSD matrix whose kernel is the constant vectors."""
    l = np.array(l, dtype=float)
    if l.shape[0] < 2:
        raise SpectralError("a gossip matrix needs at least two nodes")
    vals, vecs = symmetric_eigendecomposition(l)
    if vals[-1] < -ZERO_EIG_TOL * max(1.0, abs(vals[0])):
        raise SpectralError(f"gossip matrix is not PSD (smallest eigenvalue {vals[-1]:.3e})")
    vals = vals.copy()
    if abs(vals[-1]) <= ZERO_EIG_TOL * max(1.0, abs(vals[0])):
        vals[-1] = 0.0
    if vals[-2] <= MIN_SPECTRAL_GAP:
        raise SpectralError(
            f"lambda_(N-1)(L) = {vals[-2]:.3e}: graph is effectively disconnected"
        )
    l.setflags(write=False)
    return GossipSpec(l, vals, vecs)


def gossip_from_weights(wm: WeightMatrix) -> GossipSpec:
    """``L = I - W``."""
    return gossip_from_matrix(np.eye(wm.n_nodes) - wm.w)


def shifted_weights_dmasg(wm: WeightMatrix) -> WeightMatrix:
    """``W1 = (I + W) / 2``; maps the spectrum of W from (-1, 1] into (0, 1]."""
    return WeightMatrix.from_array(0.5 * np.eye(wm.n_nodes) + 0.5 * wm.w)


def kappa_tilde(shifted: WeightMatrix) -> float:
    """Scaled condition number ``2 / lambda_min(W1)`` of a shifted weight matrix."""
    lam = shifted.lambda_min
    if lam <= 0:
        raise SpectralError(f"shifted weights must be positive definite, lambda_min = {lam:.3e}")
    return 2.0 / lam


def matrix_to_csv(m) -> str:
    """Row-major CSV with 17 significant digits."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    return "\n".join(",".join(f"{x:.17g}" for x in row) for row in m) + "\n"
