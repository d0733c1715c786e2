"""Simulate networks from a graphon: uniform latent positions, Bernoulli edges."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def make_rng(seed):
    """PCG64 generator from an int, SeedSequence or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def validate_adjacency(y) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 2 or y.shape[0] != y.shape[1]:
        raise ValueError("adjacency matrix must be square")
    if y.shape[0] < 2:
        raise ValueError("adjacency matrix needs at least 2 nodes")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("adjacency matrix must be binary")
    if not np.array_equal(y, y.T):
        raise ValueError("adjacency matrix must be symmetric")
    if np.any(np.diag(y) != 0):
        raise ValueError("adjacency matrix must have a zero diagonal")
    return y.astype(np.int8, copy=False)


@dataclass
class Network:
    """Observed undirected network with its external node labels."""

    y: np.ndarray
    labels: list = field(default=None)

    def __post_init__(self):
        self.y = validate_adjacency(self.y)
        if self.labels is None:
            self.labels = list(range(self.y.shape[0]))
        if len(self.labels) != self.y.shape[0]:
            raise ValueError("one label per node required")

    @property
    def n_nodes(self):
        return self.y.shape[0]


def sample_latent(n: int, seed) -> np.ndarray:
    if n < 2:
        raise ValueError(f"need at least 2 nodes, got n={n}")
    rng = make_rng(seed)
    u = rng.random(n)
    # Generator.random is on [0, 1); redraw the measure-zero exact zeros
    while np.any(u == 0.0):
        u[u == 0.0] = rng.random(int(np.sum(u == 0.0)))
    return u


def sample_network(graphon, u, seed) -> np.ndarray:
    """Draw Y_ij ~ Bernoulli(w(u_i, u_j)) for i < j and mirror."""
    u = np.asarray(u, dtype=float)
    if u.ndim != 1 or len(u) < 2 or np.any(u <= 0) or np.any(u >= 1):
        raise ValueError("latent positions must be a vector of >= 2 values in (0, 1)")
    rng = make_rng(seed)
    iu, ju = np.triu_indices(len(u), k=1)
    p = graphon.evaluate(u[iu], u[ju])
    edges = rng.random(len(iu)) < p
    y = np.zeros((len(u), len(u)), dtype=np.int8)
    y[iu[edges], ju[edges]] = 1
    y[ju[edges], iu[edges]] = 1
    return y


def degree(y) -> np.ndarray:
    return np.asarray(y).sum(axis=1).astype(int)


def edge_density(y) -> float:
    n = len(y)
    return float(np.asarray(y).sum()) / (n * (n - 1))
