"""Metropolis-within-Gibbs sampling of latent positions given a graphon.

Each component is proposed by a normal random walk on the logit scale; the
acceptance ratio carries the Jacobian factor u*(1-u*) / (u(1-u)).
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from numba import njit

from .bspline import SplineGraphon
from .empirical import DENSITY_GRID, DensityOnGrid, normalize_log_density
from .netsim import make_rng, validate_adjacency

CLIP = 1e-6


@dataclass(frozen=True)
class GibbsConfig:
    proposal_sd: float = 0.5
    burn_in: int = 50
    thin: int = 5
    n_retain: int = 100
    seed: int = 0
    random_scan: bool = False

    def __post_init__(self):
        if not self.proposal_sd > 0:
            raise ValueError("proposal_sd must be positive")
        if self.thin < 1 or self.n_retain < 1 or self.burn_in < 0:
            raise ValueError("need thin >= 1, n_retain >= 1, burn_in >= 0")


@dataclass
class GibbsChain:
    states: np.ndarray  # (n_retain, N)
    acceptance_rate: np.ndarray  # per component
    config: GibbsConfig
    sweeps: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {"config": asdict(self.config), "sweeps": self.sweeps,
                "mean_acceptance": float(self.acceptance_rate.mean())}


def logit(u):
    return np.log(u) - np.log1p(-u)


def expit(z):
    # keeps the result strictly inside (0, 1) for |z| up to ~36
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _log_jacobian(u_star, u):
    # paired so that u_star == u gives exactly 0
    return (np.log(u_star) - np.log(u)) + (np.log1p(-u_star) - np.log1p(-u))


def _loglik_row(w, y_row, eps=CLIP):
    w = np.clip(w, eps, 1 - eps)
    return np.where(y_row > 0, np.log(w), np.log1p(-w))


def log_acceptance(k, u_star, u, graphon, y, eps=CLIP, rows=None):
    """Log Metropolis-Hastings ratio for moving component ``k`` to ``u_star``."""
    rows = rows if rows is not None else graphon.row_evaluator(u)
    mask = np.ones(len(u), dtype=bool)
    mask[k] = False
    diff = _loglik_row(rows.row(u_star), y[k], eps) - _loglik_row(rows.row(u[k]), y[k], eps)
    jac = _log_jacobian(u_star, u[k])
    return float(diff[mask].sum() + jac)


def update_component(u, k, graphon, y, sigma, rng, rows=None, eps=CLIP):
    """One Metropolis step for component ``k``; mutates ``u`` and returns acceptance."""
    rows = rows if rows is not None else graphon.row_evaluator(u)
    u_star = float(expit(logit(u[k]) + sigma * rng.standard_normal()))
    if not 0.0 < u_star < 1.0:
        return False
    if np.log(rng.random()) < log_acceptance(k, u_star, u, graphon, y, eps, rows):
        u[k] = u_star
        rows.update(k)
        return True
    return False


def _sweep(u, rows, y, sigma, rng, order, accepted, eps=CLIP):
    n = len(u)
    z_steps = sigma * rng.standard_normal(n)
    log_unif = np.log(rng.random(n))
    for idx, k in enumerate(order):
        uk = u[k]
        u_star = float(expit(logit(uk) + z_steps[idx]))
        if not 0.0 < u_star < 1.0:
            continue
        yk = y[k]
        diff = _loglik_row(rows.row(u_star), yk, eps) - _loglik_row(rows.row(uk), yk, eps)
        diff[k] = 0.0
        la = diff.sum() + _log_jacobian(u_star, uk)
        if log_unif[idx] < la:
            u[k] = u_star
            rows.update(k)
            accepted[k] += 1


@njit(cache=True)
def _spline_sweep(u, H, coef, h, y, z_steps, log_unif, order, accepted, eps):
    # Same arithmetic as _sweep, specialised to piecewise-bilinear graphons.
    n = u.shape[0]
    K = coef.shape[0]
    for idx in range(n):
        k = order[idx]
        uk = u[k]
        z = np.log(uk) - np.log1p(-uk) + z_steps[idx]
        u_star = 0.5 * (1.0 + np.tanh(0.5 * z))
        if not (0.0 < u_star < 1.0):
            continue
        pos_s = u_star / h
        lo_s = min(int(pos_s), K - 2)
        fs = pos_s - lo_s
        pos_c = uk / h
        lo_c = min(int(pos_c), K - 2)
        fc = pos_c - lo_c
        la = (np.log(u_star) - np.log(uk)) + (np.log1p(-u_star) - np.log1p(-uk))
        for j in range(n):
            if j == k:
                continue
            ws = (1.0 - fs) * H[lo_s, j] + fs * H[lo_s + 1, j]
            wc = (1.0 - fc) * H[lo_c, j] + fc * H[lo_c + 1, j]
            ws = min(max(ws, eps), 1.0 - eps)
            wc = min(max(wc, eps), 1.0 - eps)
            if y[k, j] > 0:
                la += np.log(ws / wc)
            else:
                la += np.log((1.0 - ws) / (1.0 - wc))
        if log_unif[idx] < la:
            u[k] = u_star
            accepted[k] += 1
            for p in range(K):
                H[p, k] = (1.0 - fs) * coef[p, lo_s] + fs * coef[p, lo_s + 1]


def _do_sweep(u, rows, y, sigma, rng, order, accepted, graphon, eps=CLIP):
    if isinstance(graphon, SplineGraphon):
        z_steps = sigma * rng.standard_normal(len(u))
        log_unif = np.log(rng.random(len(u)))
        _spline_sweep(u, rows.H, np.ascontiguousarray(graphon.coef), graphon.knots.spacing, y,
                      z_steps, log_unif, np.asarray(order, dtype=np.int64), accepted, eps)
    else:
        _sweep(u, rows, y, sigma, rng, order, accepted, eps)


def gibbs_sweep(state, graphon, y, config: GibbsConfig, rng):
    """One pass over all components; returns the new state (input untouched)."""
    y = validate_adjacency(y)
    u = np.array(state, dtype=float)
    _check_state(u, y)
    order = rng.permutation(len(u)) if config.random_scan else np.arange(len(u))
    _do_sweep(u, graphon.row_evaluator(u), y, config.proposal_sd, rng, order, np.zeros(len(u)), graphon)
    return u


def _check_state(u, y):
    if u.shape != (y.shape[0],):
        raise ValueError("need one latent position per node")
    if np.any(u <= 0) or np.any(u >= 1):
        raise ValueError("latent positions must lie strictly inside (0, 1)")


def run_chain(init, graphon, y, config: GibbsConfig) -> GibbsChain:
    """Burn in, then keep every ``thin``-th sweep until ``n_retain`` states are stored."""
    y = validate_adjacency(y)
    u = np.array(init, dtype=float)
    _check_state(u, y)
    rng = make_rng(config.seed)
    rows = graphon.row_evaluator(u)
    n = len(u)
    accepted = np.zeros(n)
    states = np.empty((config.n_retain, n))
    total = config.burn_in + config.thin * config.n_retain
    kept = 0
    for sweep in range(1, total + 1):
        order = rng.permutation(n) if config.random_scan else np.arange(n)
        _do_sweep(u, rows, y, config.proposal_sd, rng, order, accepted, graphon)
        if sweep > config.burn_in and (sweep - config.burn_in) % config.thin == 0:
            states[kept] = u
            kept += 1
    return GibbsChain(states=states, acceptance_rate=accepted / total, config=config, sweeps=total)


def posterior_means(chain: GibbsChain) -> np.ndarray:
    return chain.states.mean(axis=0)


def conditional_log_density(grid, k, state, graphon, y, eps=CLIP):
    """log f(u_k | u_-k, y) up to a constant, on ``grid``."""
    others = np.delete(np.arange(len(state)), k)
    w = graphon.evaluate(grid[:, None], state[others][None, :])
    return _loglik_row(w, y[k, others][None, :], eps).sum(axis=1)


def posterior_density(chain: GibbsChain, graphon, y, k: int, grid=DENSITY_GRID) -> DensityOnGrid:
    """Average over retained states of the normalised full conditional of node ``k``."""
    y = validate_adjacency(y)
    n = y.shape[0]
    if not 0 <= k < n:
        raise IndexError(f"node index {k} out of range for {n} nodes")
    if len(chain.states) == 0:
        raise ValueError("empty chain")
    us = np.linspace(0.0, 1.0, int(grid))
    acc = np.zeros_like(us)
    for state in chain.states:
        acc += normalize_log_density(us, conditional_log_density(us, k, state, graphon, y)).values
    return DensityOnGrid(us, acc / len(chain.states))
