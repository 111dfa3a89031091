"""Stochastic distributed averaging over networks.

Submodules: ``topology``, ``gossip``, ``observation``, ``algorithms``,
``bounds``, ``applications``, ``experiments``, ``export`` and ``cli``.
"""

__version__ = "0.1.0"

from . import algorithms, applications, bounds, experiments, export, gossip, observation, topology

__all__ = [
    "__version__",
    "algorithms",
    "applications",
    "bounds",
    "experiments",
    "export",
    "gossip",
    "observation",
    "topology",
]
