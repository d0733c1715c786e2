"""Graphon abstraction and the registry of analytic graphons.

A graphon is a symmetric function w: [0,1]^2 -> [0,1]. Concrete kinds live in
three places: analytic formulas (here), the empirical block-constant graphon
(:mod:`graphon_em.empirical`) and the tensor-product spline surface
(:mod:`graphon_em.bspline`).
"""
from __future__ import annotations

import numpy as np

DEFAULT_QUADRATURE = 1001


class DomainError(ValueError):
    """Raised when a graphon is evaluated outside the unit interval."""


def check_unit(x, name="u"):
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x > 1.0) or np.any(x < 0.0):
        raise DomainError(f"{name} must lie in [0, 1]")
    return x


class Graphon:
    """Base class: subclasses implement ``_eval`` on validated arrays."""

    kind = "abstract"

    def evaluate(self, u, v):
        """Evaluate w(u, v) with numpy broadcasting; scalars give a float."""
        u = check_unit(u, "u")
        v = check_unit(v, "v")
        out = self._eval(*np.broadcast_arrays(u, v))
        return float(out) if np.ndim(out) == 0 else out

    __call__ = evaluate

    def _eval(self, u, v):
        raise NotImplementedError

    def marginal(self, u, grid=DEFAULT_QUADRATURE):
        """Degree function g(u) = int_0^1 w(u, v) dv by trapezoid quadrature."""
        if grid < 2:
            raise ValueError("quadrature grid needs at least 2 points")
        u = check_unit(u, "u")
        vs = np.linspace(0.0, 1.0, int(grid))
        vals = self._eval(*np.broadcast_arrays(u[..., None], vs))
        out = np.trapezoid(vals, vs, axis=-1)
        return float(out) if np.ndim(out) == 0 else out

    def grid(self, size=101):
        """Surface on an equispaced ``size`` x ``size`` grid including the borders."""
        us = np.linspace(0.0, 1.0, size)
        return us, self._eval(us[:, None], us[None, :])

    def row_evaluator(self, u):
        """Helper used by the Gibbs sampler to get w(x, u_j) for all j.

        ``u`` is the live state array; the sampler mutates it in place and
        calls ``update(k)`` after each accepted move.
        """
        return _RowEvaluator(self, u)


class _RowEvaluator:
    def __init__(self, graphon, u):
        self.graphon = graphon
        self.u = u

    def row(self, x):
        return self.graphon._eval(np.full_like(self.u, x), self.u)

    def update(self, k):
        pass


class AnalyticGraphon(Graphon):
    """Graphon given by a vectorised closed-form expression."""

    kind = "analytic"

    def __init__(self, name, fct, marginal_fct=None, params=None):
        self.name = name
        self._fct = fct
        self._marginal = marginal_fct
        self.params = dict(params or {})

    def _eval(self, u, v):
        return np.clip(self._fct(u, v), 0.0, 1.0)

    def marginal(self, u, grid=DEFAULT_QUADRATURE):
        if self._marginal is None:
            return super().marginal(u, grid)
        if grid < 2:
            raise ValueError("quadrature grid needs at least 2 points")
        u = check_unit(u, "u")
        out = np.asarray(self._marginal(u), dtype=float) + np.zeros_like(u)
        return float(out) if np.ndim(out) == 0 else out

    def __repr__(self):
        return f"AnalyticGraphon({self.name!r})"


def _w1(u, v):
    return 0.5 * (u + v)


def _w2(u, v):
    # grouped so that w(u, v) == w(v, u) bit for bit
    return 0.8 * ((1 - u) * (1 - v)) + 0.85 * (u * v)


def constant_graphon(c):
    c = float(c)
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"constant graphon value must be in [0, 1], got {c}")
    return AnalyticGraphon(
        f"const:{c:g}",
        lambda u, v: np.full(np.broadcast(u, v).shape, c),
        lambda u: np.full(np.shape(u), c),
        {"c": c},
    )


GRAPHONS = {
    "w1": lambda: AnalyticGraphon("w1", _w1, lambda u: 0.5 * u + 0.25),
    # g2(u) = 0.4 (1 - u) + 0.425 u
    "w2": lambda: AnalyticGraphon("w2", _w2, lambda u: 0.4 + 0.025 * u),
}


def get_graphon(name):
    """Look up a registered graphon: ``"w1"``, ``"w2"`` or ``"const:<c>"``."""
    if name in GRAPHONS:
        return GRAPHONS[name]()
    if name.startswith("const:"):
        try:
            return constant_graphon(float(name.split(":", 1)[1]))
        except ValueError as err:
            raise KeyError(f"bad constant graphon id {name!r}: {err}") from None
    raise KeyError(f"unknown graphon id {name!r}; known: {sorted(GRAPHONS)} or const:<c>")
