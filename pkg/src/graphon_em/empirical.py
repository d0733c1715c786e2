"""Degree ordering, the empirical graphon and its marginal posterior approximation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphon import Graphon, check_unit
from .netsim import degree, validate_adjacency

DENSITY_GRID = 201
CLIP = 1e-6


class DegenerateDensityError(ArithmeticError):
    """A posterior density could not be normalised on the grid."""


@dataclass(frozen=True)
class DensityOnGrid:
    grid: np.ndarray
    values: np.ndarray

    def integral(self):
        return float(np.trapezoid(self.values, self.grid))

    def mean(self):
        return float(np.trapezoid(self.grid * self.values, self.grid))


def normalize_log_density(grid, log_values) -> DensityOnGrid:
    """Exponentiate relative to the maximum and rescale to unit trapezoid mass."""
    log_values = np.asarray(log_values, dtype=float)
    top = np.max(log_values)
    if not np.isfinite(top):
        raise DegenerateDensityError("density is zero or non-finite on the whole grid")
    vals = np.exp(log_values - top)
    mass = np.trapezoid(vals, grid)
    if not np.isfinite(mass) or mass <= 0:
        raise DegenerateDensityError("density does not integrate to a positive number")
    return DensityOnGrid(np.asarray(grid, dtype=float), vals / mass)


def rank_positions(values) -> np.ndarray:
    """rank / (N + 1), ranks ascending with ties broken by node index."""
    values = np.asarray(values)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=int)
    ranks[order] = np.arange(1, len(values) + 1)
    return ranks / (len(values) + 1.0)


class EmpiricalGraphon(Graphon):
    """Block-constant graphon of the degree-sorted adjacency matrix."""

    kind = "empirical"

    def __init__(self, y):
        y = validate_adjacency(y)
        deg = degree(y)
        self.sigma_hat = np.argsort(deg, kind="stable")
        self.sorted_y = y[np.ix_(self.sigma_hat, self.sigma_hat)]
        self.u_hat_emp = rank_positions(deg)
        self.degrees = deg

    @property
    def n_nodes(self):
        return len(self.sigma_hat)

    def _index(self, u):
        # ceil(u N) in 1..N, with u = 0 mapped to the first block
        idx = np.ceil(np.asarray(u) * self.n_nodes).astype(int)
        return np.clip(idx, 1, self.n_nodes) - 1

    def _eval(self, u, v):
        return self.sorted_y[self._index(u), self._index(v)].astype(float)

    def marginal(self, u, grid=None):
        """Degree of the selected sorted row over N."""
        u = check_unit(u, "u")
        out = self.degrees[self.sigma_hat[self._index(u)]] / self.n_nodes
        return float(out) if np.ndim(out) == 0 else out


def order_by_degree(y) -> EmpiricalGraphon:
    return EmpiricalGraphon(y)


def empirical_graphon_value(eg: EmpiricalGraphon, u, v):
    return eg.evaluate(u, v)


def empirical_marginal(eg: EmpiricalGraphon, u):
    return eg.marginal(u)


def marginal_posterior_empirical(eg: EmpiricalGraphon, k: int, grid=DENSITY_GRID, eps=CLIP):
    """Approximate posterior of U_k from the empirical degree profile.

    Density proportional to g(u)^d (1 - g(u))^(N - d), with d the degree of
    node ``k`` (0-based) and g clipped to [eps, 1 - eps].
    """
    n = eg.n_nodes
    if not 0 <= k < n:
        raise IndexError(f"node index {k} out of range for {n} nodes")
    if grid < 3:
        raise ValueError("density grid needs at least 3 points")
    us = np.linspace(0.0, 1.0, int(grid))
    g = np.clip(eg.marginal(us), eps, 1 - eps)
    d = eg.degrees[k]
    return normalize_log_density(us, d * np.log(g) + (n - d) * np.log1p(-g))
