"""Undirected network topologies used in the experiments.

Five families are supported: path, cycle, star, (non-toroidal) square grid
and Erdos-Renyi random graphs. Node indices are 0-based; the edge-list text
format written by :meth:`Topology.to_edge_list` is 1-based.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass
from itertools import combinations

import numpy as np

__all__ = [
    "Kind",
    "Topology",
    "TopologyError",
    "build_path",
    "build_cycle",
    "build_star",
    "build_grid",
    "build_erdos_renyi",
    "build",
    "default_er_probability",
    "read_edge_list",
]

ER_MAX_RETRIES = 1000


class TopologyError(ValueError):
    """Invalid topology parameters or an unusable graph."""


class Kind(str, enum.Enum):
    PATH = "path"
    CYCLE = "cycle"
    STAR = "star"
    GRID = "grid"
    ERDOS_RENYI = "erdos_renyi"


@dataclass(frozen=True)
class Topology:
    """A simple connected undirected graph.

    Attributes:
        n_nodes: Number of nodes ``N``.
        edges: Sorted tuple of ``(u, v)`` pairs with ``u < v``.
        kind: Graph family that produced the edges.
        seed: Seed actually used (Erdos-Renyi only, after connectivity retries).
    """

    n_nodes: int
    edges: tuple[tuple[int, int], ...]
    kind: Kind
    seed: int | None = None

    def __post_init__(self):
        if self.n_nodes < 1:
            raise TopologyError(f"need at least one node, got {self.n_nodes}")
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise TopologyError(f"self-loop at node {u}")
            if not (0 <= u < v < self.n_nodes):
                raise TopologyError(f"edge ({u}, {v}) not normalized or out of range")
            if (u, v) in seen:
                raise TopologyError(f"duplicate edge ({u}, {v})")
            seen.add((u, v))
        if not self.is_connected():
            raise TopologyError(f"{self.kind.value} graph on {self.n_nodes} nodes is disconnected")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def neighbors(self) -> list[list[int]]:
        nbrs: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for u, v in self.edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        return [sorted(x) for x in nbrs]

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_nodes, dtype=int)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.n_nodes, self.n_nodes))
        for u, v in self.edges:
            adj[u, v] = adj[v, u] = 1.0
        return adj

    def is_connected(self) -> bool:
        nbrs = self.neighbors()
        seen = {0}
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for v in nbrs[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return len(seen) == self.n_nodes

    def to_edge_list(self) -> str:
        """``"N M"`` header followed by one 1-based ``"u v"`` line per edge."""
        lines = [f"{self.n_nodes} {self.n_edges}"]
        lines.extend(f"{u + 1} {v + 1}" for u, v in self.edges)
        return "\n".join(lines) + "\n"


def read_edge_list(text: str, kind: Kind | str = Kind.PATH) -> Topology:
    """Parse the format written by :meth:`Topology.to_edge_list`."""
    rows = [line.split() for line in text.strip().splitlines() if line.strip()]
    n, m = (int(x) for x in rows[0])
    edges = [tuple(sorted((int(a) - 1, int(b) - 1))) for a, b in rows[1:]]
    if len(edges) != m:
        raise TopologyError(f"header declares {m} edges, found {len(edges)}")
    return Topology(n, tuple(sorted(edges)), Kind(kind))


def _make(n, edges, kind, seed=None):
    norm = sorted({(min(u, v), max(u, v)) for u, v in edges})
    return Topology(n, tuple(norm), kind, seed)


def build_path(n: int) -> Topology:
    if n < 2:
        raise TopologyError(f"path needs n >= 2, got {n}")
    return _make(n, [(i, i + 1) for i in range(n - 1)], Kind.PATH)


def build_cycle(n: int) -> Topology:
    if n < 3:
        raise TopologyError(f"cycle needs n >= 3, got {n}")
    return _make(n, [(i, (i + 1) % n) for i in range(n)], Kind.CYCLE)


def build_star(n: int) -> Topology:
    """Node 0 is the hub."""
    if n < 2:
        raise TopologyError(f"star needs n >= 2, got {n}")
    return _make(n, [(0, i) for i in range(1, n)], Kind.STAR)


def build_grid(n: int) -> Topology:
    """Square ``sqrt(n) x sqrt(n)`` lattice without wraparound, row-major labels."""
    side = math.isqrt(n) if n >= 0 else 0
    if n < 4 or side * side != n:
        raise TopologyError(f"grid needs a perfect square n >= 4, got {n}")
    edges = []
    for r in range(side):
        for c in range(side):
            i = r * side + c
            if c + 1 < side:
                edges.append((i, i + 1))
            if r + 1 < side:
                edges.append((i, i + side))
    return _make(n, edges, Kind.GRID)


def default_er_probability(n: int) -> float:
    """``2 ln(N) / N``: sparse but connected with high probability."""
    return 2.0 * math.log(n) / n


def build_erdos_renyi(n: int, p: float, seed: int) -> Topology:
    """G(n, p) realization, reseeded deterministically until connected.

    Each of the ``C(n, 2)`` pairs, in lexicographic order, is kept when a
    uniform draw from ``numpy.random.default_rng(seed)`` falls below ``p``.
    A disconnected realization moves on to ``seed + 1``; the seed that finally
    produced a connected graph is stored on the result.
    """
    if n < 2:
        raise TopologyError(f"Erdos-Renyi graph needs n >= 2, got {n}")
    if not (0.0 < p <= 1.0):
        raise TopologyError(f"edge probability must lie in (0, 1], got {p}")
    pairs = list(combinations(range(n), 2))
    for attempt in range(ER_MAX_RETRIES + 1):
        used = seed + attempt
        keep = np.random.default_rng(used).random(len(pairs)) < p
        edges = tuple(pair for pair, k in zip(pairs, keep) if k)
        try:
            return Topology(n, edges, Kind.ERDOS_RENYI, used)
        except TopologyError:
            continue
    raise TopologyError(
        f"no connected G({n}, {p}) realization after {ER_MAX_RETRIES} retries from seed {seed}"
    )


def build(kind: Kind | str, n: int, p: float | None = None, seed: int = 0) -> Topology:
    """Dispatch on ``kind``; ``p`` defaults to :func:`default_er_probability`."""
    kind = Kind(kind)
    if kind is Kind.PATH:
        return build_path(n)
    if kind is Kind.CYCLE:
        return build_cycle(n)
    if kind is Kind.STAR:
        return build_star(n)
    if kind is Kind.GRID:
        return build_grid(n)
    return build_erdos_renyi(n, default_er_probability(n) if p is None else p, seed)
