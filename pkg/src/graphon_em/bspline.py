"""Linear B-spline basis on equidistant knots and the spline graphon surface.

Coefficients are stored row-major: ``theta[p * K + q]`` is the weight of
``B_p(u) B_q(v)``, so ``theta.reshape(K, K)`` is the coefficient matrix and
``w(u, v) = B(u) @ Theta @ B(v).T``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .graphon import DomainError, Graphon, check_unit

DEFAULT_K = 12


@dataclass(frozen=True)
class KnotGrid:
    K: int = DEFAULT_K

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 3:
            raise ValueError(f"need at least 3 knots, got K={self.K}")

    @cached_property
    def tau(self):
        return np.linspace(0.0, 1.0, self.K)

    @property
    def spacing(self):
        return 1.0 / (self.K - 1)


def basis_matrix(knots: KnotGrid, u) -> np.ndarray:
    """Hat-function values for each entry of ``u``; shape ``u.shape + (K,)``."""
    u = check_unit(u, "u")
    dist = np.abs(u[..., None] - knots.tau) / knots.spacing
    return np.maximum(0.0, 1.0 - dist)


def basis_row(knots: KnotGrid, u: float) -> np.ndarray:
    if np.ndim(u) != 0:
        raise ValueError("basis_row takes a scalar; use basis_matrix for arrays")
    return basis_matrix(knots, u)


def design_row(knots: KnotGrid, u_i: float, u_j: float) -> np.ndarray:
    """Row B(u_i) kron B(u_j) of the tensor-product design."""
    return np.kron(basis_row(knots, u_i), basis_row(knots, u_j))


def integral_vector(knots: KnotGrid) -> np.ndarray:
    """Exact integrals of the hats over [0, 1]: (1/2, 1, ..., 1, 1/2) / (K - 1)."""
    a = np.full(knots.K, knots.spacing)
    a[[0, -1]] *= 0.5
    return a


def spline_marginal_row(knots: KnotGrid, u) -> np.ndarray:
    """Row(s) ``B(u) kron A``; their product with theta is the degree function."""
    b = basis_matrix(knots, u)
    return (b[..., :, None] * integral_vector(knots)).reshape(b.shape[:-1] + (knots.K**2,))


def symmetry_matrix(K: int) -> np.ndarray:
    """One row ``theta_pq - theta_qp`` per pair p < q."""
    p, q = np.triu_indices(K, k=1)
    D = np.zeros((len(p), K * K))
    rows = np.arange(len(p))
    D[rows, p * K + q] = 1.0
    D[rows, q * K + p] = -1.0
    return D


def constraint_matrices(knots: KnotGrid):
    """Linear side constraints of the canonical spline graphon.

    Returns ``(C, b, D)`` with feasible set ``C theta >= b``, ``D theta = 0``.
    Rows of ``C``: K - 1 monotonicity rows for the degree function at the
    knots, then ``theta >= 0`` and ``-theta >= -1``.
    """
    K = knots.K
    marg = spline_marginal_row(knots, knots.tau)
    mono = marg[1:] - marg[:-1]
    eye = np.eye(K * K)
    C = np.vstack([mono, eye, -eye])
    b = np.concatenate([np.zeros(K - 1), np.zeros(K * K), -np.ones(K * K)])
    return C, b, symmetry_matrix(K)


class SplineGraphon(Graphon):
    """Piecewise bilinear surface ``[B(u) kron B(v)] theta``."""

    kind = "spline"

    def __init__(self, knots: KnotGrid, theta):
        theta = np.array(theta, dtype=float)
        if theta.shape != (knots.K**2,):
            raise ValueError(f"theta must have length K^2 = {knots.K**2}, got {theta.shape}")
        theta.setflags(write=False)
        self.knots = knots
        self.theta = theta

    @property
    def coef(self):
        return self.theta.reshape(self.knots.K, self.knots.K)

    def _eval(self, u, v):
        bu = basis_matrix(self.knots, u)
        bv = basis_matrix(self.knots, v)
        return np.einsum("...p,pq,...q->...", bu, self.coef, bv)

    def marginal(self, u, grid=None):
        """Exact degree function ``[B(u) kron A] theta``; ``grid`` is ignored."""
        out = spline_marginal_row(self.knots, u) @ self.theta
        return float(out) if np.ndim(out) == 0 else out

    def knot_marginal(self):
        return self.coef @ integral_vector(self.knots)

    def check_invariants(self, tol=1e-8):
        """Return a dict of the worst violation of each canonical-form constraint."""
        coef = self.coef
        g = self.knot_marginal()
        return {
            "symmetry": float(np.max(np.abs(coef - coef.T))),
            "box_low": float(max(0.0, -coef.min())),
            "box_high": float(max(0.0, coef.max() - 1.0)),
            "monotone": float(max(0.0, -np.diff(g).min())),
        }

    def is_canonical(self, tol=1e-8):
        return all(v <= tol for v in self.check_invariants().values())

    def row_evaluator(self, u):
        return _SplineRows(self, u)

    def __repr__(self):
        return f"SplineGraphon(K={self.knots.K})"


class _SplineRows:
    """Caches ``Theta @ B(u_j)`` so each row costs O(N) instead of O(N K)."""

    def __init__(self, graphon: SplineGraphon, u):
        self.g = graphon
        self.u = u
        self.H = graphon.coef @ basis_matrix(graphon.knots, u).T  # (K, N)
        self._h = graphon.knots.spacing
        self._K = graphon.knots.K

    def _hat(self, x):
        if not 0.0 <= x <= 1.0:
            raise DomainError("u must lie in [0, 1]")
        pos = x / self._h
        lo = min(int(pos), self._K - 2)
        frac = pos - lo
        return lo, frac

    def row(self, x):
        lo, frac = self._hat(x)
        return (1.0 - frac) * self.H[lo] + frac * self.H[lo + 1]

    def update(self, k):
        lo, frac = self._hat(self.u[k])
        self.H[:, k] = (1.0 - frac) * self.g.coef[:, lo] + frac * self.g.coef[:, lo + 1]
