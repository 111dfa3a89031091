"""Closed-form guarantees for SDA and DSG, and the linear-recursion oracle.

The recursion oracle rewrites one SDA coordinate in error coordinates
``U_t = X_t - (mu_bar e - mu)`` and ``V_t = Y_t - Y_{t-1}``; these evolve as
``[U; V]_{t+1} = A [U; V]_t - eta B omega_t`` with ``omega_t`` the centered
observation noise. It is used by the tests to cross-check the SDA runner.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .gossip import GossipSpec, WeightMatrix, symmetric_eigendecomposition

__all__ = [
    "KStar",
    "BoundReport",
    "RecursionOracle",
    "EntryBoundResult",
    "compute_k_star",
    "k_star_envelope",
    "sda_bound_terms",
    "sda_upper_bound",
    "dsg_upper_bound",
    "build_oracle",
    "oracle_step",
    "oracle_state",
    "momentum_block",
    "lemma2_entry_bound_check",
    "squared_envelope_sum",
    "spectral_norm",
    "inverse_perturbation_sides",
]


@dataclass(frozen=True)
class KStar:
    kappa: float
    value: int
    cap_check: bool


def k_star_envelope(kappa: float, k) -> np.ndarray:
    """``(1 + k/(sqrt(kappa)+1)) (1 - 1/sqrt(kappa))^k``."""
    root = math.sqrt(kappa)
    k = np.asarray(k, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (1.0 + k / (root + 1.0)) * np.power(1.0 - 1.0 / root, k)


def compute_k_star(kappa: float) -> KStar:
    """Smallest k >= 1 from which the envelope stays below ``(1 - 1/(2 sqrt(kappa)))^k``.

    Scans ``k = 1 .. 3 ceil(sqrt(kappa)) + 50``; past ``3 sqrt(kappa)`` the
    ratio of the two sides only improves, so the scan is exhaustive.
    """
    if not kappa >= 1.0:
        raise ValueError(f"kappa must be >= 1, got {kappa}")
    root = math.sqrt(kappa)
    if root == 1.0:
        return KStar(kappa, 1, True)
    ceiling = 3 * math.ceil(root) + 50
    k = np.arange(1, ceiling + 1, dtype=float)
    # compare in logs; both sides are positive for kappa > 1
    lhs = np.log1p(k / (root + 1.0)) + k * math.log1p(-1.0 / root)
    rhs = k * math.log1p(-0.5 / root)
    fails = np.flatnonzero(lhs > rhs)
    value = 1 if fails.size == 0 else int(k[fails[-1]]) + 1
    return KStar(kappa, value, value <= 3.0 * root)


@dataclass(frozen=True)
class BoundReport:
    """Three-term upper bound on ``E[sum_i ||theta_hat_i - mu_bar||^2]``.

    For SDA the terms are the bias term, the ``1/T^2`` variance term and the
    ``1/T`` variance term; for DSG they follow the same ordering.
    """

    bias_term: float
    variance_mid_term: float
    variance_tail_term: float
    t_total: int
    algorithm: str = "sda"
    k_star: int | None = None
    precondition_met: bool = True
    empirical_mse: float | None = None

    @property
    def total(self) -> float:
        return self.bias_term + self.variance_mid_term + self.variance_tail_term

    def with_empirical(self, mse: float) -> "BoundReport":
        return BoundReport(self.bias_term, self.variance_mid_term, self.variance_tail_term,
                           self.t_total, self.algorithm, self.k_star, self.precondition_met, mse)

    def to_csv(self) -> str:
        cols = ["algorithm", "T", "bias_term", "variance_mid_term", "variance_tail_term",
                "total", "k_star", "precondition_met", "empirical_mse"]
        emp = "" if self.empirical_mse is None else f"{self.empirical_mse:.17g}"
        vals = [self.algorithm, str(self.t_total), f"{self.bias_term:.17g}",
                f"{self.variance_mid_term:.17g}", f"{self.variance_tail_term:.17g}",
                f"{self.total:.17g}", "" if self.k_star is None else str(self.k_star),
                str(self.precondition_met).lower(), emp]
        return ",".join(cols) + "\n" + ",".join(vals) + "\n"


def sda_bound_terms(kappa: float, bias_energy: float, variances, t_total: int) -> BoundReport:
    """SDA bound from ``kappa(L)``, ``sum_i ||mu_i - mu_bar||^2`` and the ``(N, n)`` variances."""
    variances = np.atleast_2d(np.asarray(variances, dtype=float))
    T = float(t_total)
    root = math.sqrt(kappa)
    ks = compute_k_star(kappa).value
    bias = 16.0 * kappa / T**2 * math.exp(-T / (2.0 * root)) * bias_energy
    mid = 24.0 * (ks + root) * float(variances.sum()) / T**2
    tail = 2.0 * float(variances.max(axis=0).sum()) / T
    ok = (t_total // 2) >= ks
    if t_total % 2:
        warnings.warn(f"odd T={t_total}: burn-in taken as floor(T/2)", stacklevel=2)
    if not ok:
        warnings.warn(f"T/2 = {t_total // 2} < k* = {ks}; bound reported outside its precondition",
                      stacklevel=2)
    return BoundReport(bias, mid, tail, t_total, "sda", ks, ok)


def sda_upper_bound(gossip: GossipSpec, instance, t_total: int) -> BoundReport:
    """Finite-time SDA bound for an instance exposing ``means`` and ``variances``."""
    means = np.asarray(instance.means, dtype=float)
    energy = float(np.sum((means - means.mean(axis=0)) ** 2))
    return sda_bound_terms(gossip.kappa_l, energy, instance.variances, t_total)


def dsg_upper_bound(weights: WeightMatrix, instance, t_total: int) -> BoundReport:
    """Finite-time DSG bound with ``eta_t = 1/(t+1)``.

    Uses the magnitude-ordered spectrum of ``W`` and, for every coordinate,
    the variances sorted in decreasing order.
    """
    means = np.asarray(instance.means, dtype=float)
    var = np.atleast_2d(np.asarray(instance.variances, dtype=float))
    n_nodes = means.shape[0]
    T = float(t_total)
    bias = 2.0 * weights.kappa_w**2 * float(np.sum(means**2)) / T**2
    mags = np.abs(weights.eigs_desc_by_magnitude)
    ordered = -np.sort(-var, axis=0)  # row i holds sigma^2_(i), s
    per_rank = ordered.sum(axis=1)
    mid = 2.0 / T**2 * float(np.sum(per_rank[: n_nodes - 1] / (1.0 - mags[1:] ** 2)))
    tail = 2.0 * float(var.sum()) / (n_nodes * T)
    return BoundReport(bias, mid, tail, t_total, "dsg")


@dataclass(frozen=True)
class RecursionOracle:
    a: np.ndarray
    b: np.ndarray
    eta: float
    zeta: float
    l: np.ndarray


def build_oracle(l, eta: float, zeta: float) -> RecursionOracle:
    """``A = [[I - eta(1+zeta)L, zeta^2 I], [-eta L, zeta I]]``, ``B = [[(1+zeta)L], [L]]``."""
    l = np.asarray(l, dtype=float)
    n = l.shape[0]
    eye = np.eye(n)
    a = np.block([[eye - eta * (1.0 + zeta) * l, zeta**2 * eye], [-eta * l, zeta * eye]])
    b = np.vstack([(1.0 + zeta) * l, l])
    return RecursionOracle(a, b, eta, zeta, l)


def oracle_step(oracle: RecursionOracle, u, v, omega):
    """One step of the error recursion; returns ``(u_next, v_next)``."""
    u, v, omega = (np.asarray(z, dtype=float) for z in (u, v, omega))
    n = oracle.l.shape[0]
    if u.shape[0] != n or v.shape[0] != n or omega.shape[0] != n:
        raise ValueError(f"state vectors must have length {n}")
    nxt = oracle.a @ np.concatenate([u, v]) - oracle.eta * (oracle.b @ omega)
    return nxt[:n], nxt[n:]


def oracle_state(x, y, y_prev, means):
    """Map SDA iterates of one coordinate to the oracle's ``(U, V)``."""
    means = np.asarray(means, dtype=float)
    return x - (means.mean() - means), y - y_prev


def momentum_block(kappa: float, ratio: float) -> np.ndarray:
    """2x2 block ``A(lambda_i)`` at ``eta = 1/lambda_1`` with ``ratio = lambda_i / lambda_1``."""
    root = math.sqrt(kappa)
    zeta = (root - 1.0) / (root + 1.0)
    return np.array([[1.0 - (1.0 + zeta) * ratio, zeta**2], [-ratio, zeta]])


@dataclass(frozen=True)
class EntryBoundResult:
    passed: bool
    violating_k: int | None = None
    part: str | None = None

    def __bool__(self):
        return self.passed


def lemma2_entry_bound_check(kappa: float, ratio: float, k_max: int, rtol: float = 1e-9) -> EntryBoundResult:
    """Check both entry bounds on powers of the 2x2 block for ``k <= k_max``.

    (a) ``|[A^k]_11| <= env(k)`` and (b) ``|[A^k]_12 [A^j]_21| <= env(k)`` for
    ``j >= k``, where ``env`` is :func:`k_star_envelope`. ``rtol`` absorbs
    rounding at the double eigenvalue, where (a) holds with equality.
    """
    if not (1.0 / kappa) * (1 - 1e-12) <= ratio <= 1.0 + 1e-12:
        raise ValueError(f"ratio {ratio} outside [1/kappa, 1]")
    block = momentum_block(kappa, ratio)
    powers = [np.eye(2)]
    for _ in range(k_max):
        powers.append(powers[-1] @ block)
    env = k_star_envelope(kappa, np.arange(k_max + 1))
    if math.sqrt(kappa) == 1.0:
        env = np.where(np.arange(k_max + 1) == 0, 1.0, 0.0)
    slack = rtol * env + 1e-14
    a12 = np.array([p[0, 1] for p in powers])
    a21 = np.array([p[1, 0] for p in powers])
    for k, p in enumerate(powers):
        if abs(p[0, 0]) > env[k] + slack[k]:
            return EntryBoundResult(False, k, "a")
        if np.any(np.abs(a12[k] * a21[k:]) > env[k] + slack[k]):
            return EntryBoundResult(False, k, "b")
    return EntryBoundResult(True)


def squared_envelope_sum(kappa: float, k_max: int) -> float:
    """``sum_{k=0}^{k_max}`` of the squared envelope."""
    if math.sqrt(kappa) == 1.0:
        return 1.0
    return float(np.sum(k_star_envelope(kappa, np.arange(k_max + 1)) ** 2))


def spectral_norm(m) -> float:
    """Largest singular value via the eigenvalues of ``M^T M``."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    vals, _ = symmetric_eigendecomposition(m.T @ m)
    return math.sqrt(max(vals[0], 0.0))


def inverse_perturbation_sides(a, b):
    """Both sides of the inverse-perturbation inequality, plus ``||A^-1 (B - A)||``.

    Returns ``(lhs, rhs, contraction)`` with ``lhs = ||A^-1 - B^-1||`` and
    ``rhs = ||A^-1||^2 ||A - B|| / (1 - contraction)``; the inequality is
    meaningful only when ``contraction < 1``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a_inv = np.linalg.inv(a)
    b_inv = np.linalg.inv(b)
    contraction = spectral_norm(a_inv @ (b - a))
    lhs = spectral_norm(a_inv - b_inv)
    rhs = spectral_norm(a_inv) ** 2 * spectral_norm(a - b) / (1.0 - contraction)
    return lhs, rhs, contraction
