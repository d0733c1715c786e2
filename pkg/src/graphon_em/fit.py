"""Penalised constrained maximum likelihood for the spline graphon (the M-step).

For fixed latent positions the coefficients are found by Fisher scoring where
every step is a quadratic program carrying the canonical-form constraints.
The smoothing parameter is chosen by the corrected AIC over a grid.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .bspline import KnotGrid, SplineGraphon, basis_matrix, constraint_matrices
from .netsim import edge_density, validate_adjacency
from .qp import OPTIMAL, QuadraticProgram, solve_qp

log = logging.getLogger(__name__)

CLIP = 1e-6
DEFAULT_LAMBDAS = tuple(np.logspace(-2, 6, 9))


class FitError(RuntimeError):
    pass


class InvalidModelError(ValueError):
    pass


@dataclass
class FitControls:
    max_iter: int = 100
    step_tol: float = 1e-6
    max_halvings: int = 20
    eps: float = CLIP
    qp_tol: float = 1e-8


@dataclass
class FitResult:
    graphon: SplineGraphon
    lam: float
    log_likelihood: float
    penalized_log_likelihood: float
    df: float
    aic_c: float
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)
    path: list = field(default_factory=list)

    @property
    def theta(self):
        return self.graphon.theta


def difference_matrix(K: int) -> np.ndarray:
    """(K - 1) x K first-order differences."""
    return np.eye(K - 1, K) - np.eye(K - 1, K, k=1)


def penalty_matrix(K: int) -> np.ndarray:
    L = difference_matrix(K)
    eye = np.eye(K)
    Lr = np.kron(L, eye)
    Lc = np.kron(eye, L)
    return Lr.T @ Lr + Lc.T @ Lc


class _Design:
    """Pairwise model quantities for fixed positions ``u`` and network ``y``.

    Uses ``w_ij = B(u_i) Theta B(u_j)'`` so that nothing of size N^2 x K^2 is
    ever formed.
    """

    def __init__(self, u, y, knots: KnotGrid, eps=CLIP):
        self.y = validate_adjacency(y).astype(float)
        self.u = np.asarray(u, dtype=float)
        if self.u.shape != (self.y.shape[0],):
            raise ValueError("need one latent position per node")
        self.knots = knots
        self.eps = eps
        self.Bu = basis_matrix(knots, self.u)
        K = knots.K
        # M[i, (p, r)] = B_p(u_i) B_r(u_i)
        self.M = (self.Bu[:, :, None] * self.Bu[:, None, :]).reshape(len(self.u), K * K)
        self.offdiag = ~np.eye(len(self.u), dtype=bool)

    def w(self, theta):
        K = self.knots.K
        w = self.Bu @ theta.reshape(K, K) @ self.Bu.T
        return np.clip(w, self.eps, 1 - self.eps)

    def log_likelihood(self, theta):
        w = self.w(theta)
        ll = np.where(self.y > 0, np.log(w), np.log1p(-w))
        return float(ll[self.offdiag].sum())

    def score(self, theta, flat_clipped=False):
        w = self.w(theta)
        r = self.y / w - (1 - self.y) / (1 - w)
        np.fill_diagonal(r, 0.0)
        if flat_clipped:
            # the clipped log likelihood is constant in theta for these pairs
            raw = self.Bu @ theta.reshape(self.knots.K, -1) @ self.Bu.T
            r[(raw < self.eps) | (raw > 1 - self.eps)] = 0.0
        return (self.Bu.T @ r @ self.Bu).ravel()

    def fisher(self, theta):
        K = self.knots.K
        w = self.w(theta)
        v = 1.0 / (w * (1 - w))
        np.fill_diagonal(v, 0.0)
        t = (self.M.T @ v @ self.M).reshape(K, K, K, K)  # [p, r, q, s]
        return t.transpose(0, 2, 1, 3).reshape(K * K, K * K)


def log_likelihood(theta, u, y, knots: KnotGrid, eps=CLIP) -> float:
    return _Design(u, y, knots, eps).log_likelihood(np.asarray(theta, dtype=float))


def score(theta, u, y, knots: KnotGrid, eps=CLIP) -> np.ndarray:
    return _Design(u, y, knots, eps).score(np.asarray(theta, dtype=float))


def fisher(theta, u, y, knots: KnotGrid, eps=CLIP) -> np.ndarray:
    return _Design(u, y, knots, eps).fisher(np.asarray(theta, dtype=float))


def _df(info, lam, P):
    pinfo = info + lam * P
    try:
        return float(np.trace(np.linalg.solve(pinfo, info))), False
    except np.linalg.LinAlgError:
        pinfo = pinfo + 1e-10 * np.eye(len(info))
        return float(np.trace(np.linalg.solve(pinfo, info))), True


def effective_df(theta_hat, u, y, lam, knots: KnotGrid, eps=CLIP) -> float:
    """tr{(I + lam P)^-1 I} at ``theta_hat``."""
    info = fisher(theta_hat, u, y, knots, eps)
    df, regularized = _df(info, lam, penalty_matrix(knots.K))
    if regularized:
        log.warning("penalised Fisher matrix singular; regularised with 1e-10 I")
    return df


def aic_c(log_lik: float, df: float, n_nodes: int) -> float:
    """Corrected AIC with sample size N(N - 1) ordered pairs."""
    n_obs = n_nodes * (n_nodes - 1)
    if df >= n_obs - 1:
        raise InvalidModelError(f"df={df} too large for {n_obs} observations")
    return -2.0 * log_lik + 2.0 * df + 2.0 * df * (df + 1.0) / (n_obs - df - 1.0)


def fit_theta(u, y, lam, knots: KnotGrid, init_theta=None, controls: FitControls | None = None) -> FitResult:
    """Constrained Fisher scoring for the penalised log likelihood at fixed ``lam``."""
    if lam < 0:
        raise ValueError("smoothing parameter must be non-negative")
    controls = controls or FitControls()
    des = _Design(u, y, knots, controls.eps)
    K = knots.K
    P = penalty_matrix(K)
    C, b, D = constraint_matrices(knots)
    if init_theta is None:
        theta = np.full(K * K, edge_density(des.y))
    else:
        theta = np.array(init_theta, dtype=float)
        if np.any(C @ theta - b < -1e-8) or np.abs(D @ theta).max() > 1e-8:
            raise FitError("initial coefficients violate the constraints")

    def penalized(th):
        return des.log_likelihood(th) - 0.5 * lam * th @ P @ th

    lp = penalized(theta)
    trace = [{"iteration": 0, "penalized": lp, "halvings": 0, "step": np.nan}]
    converged = False
    it = 0
    for it in range(1, controls.max_iter + 1):
        info = des.fisher(theta)
        sp = des.score(theta, flat_clipped=True) - lam * P @ theta
        qp = QuadraticProgram(
            Q=info + lam * P,
            c=sp,
            A_eq=D,
            b_eq=-D @ theta,
            A_in=C,
            b_in=b - C @ theta,
        )
        sol = solve_qp(qp, tol=controls.qp_tol, x0=np.zeros(K * K))
        if sol.status != OPTIMAL:
            if sol.status == "infeasible":
                raise FitError("quadratic program infeasible")
            log.warning("QP stopped with status %s at iteration %d", sol.status, it)
        delta = sol.x
        step = float(np.abs(delta).max())
        alpha, halvings = 1.0, 0
        lp_new = penalized(theta + delta)
        while lp_new < lp and halvings < controls.max_halvings:
            alpha *= 0.5
            halvings += 1
            lp_new = penalized(theta + alpha * delta)
        if lp_new < lp:
            trace.append({"iteration": it, "penalized": lp, "halvings": halvings, "step": step, "rejected": True})
            converged = step < controls.step_tol
            break
        theta = theta + alpha * delta
        lp = lp_new
        trace.append({"iteration": it, "penalized": lp, "halvings": halvings, "step": step})
        if step < controls.step_tol:
            converged = True
            break
    if not converged:
        log.info("fit at lambda=%g did not reach step tolerance in %d iterations", lam, it)

    theta = _clean(theta)
    info = des.fisher(theta)
    df, regularized = _df(info, lam, P)
    if regularized:
        trace.append({"note": "penalised Fisher matrix regularised"})
    ll = des.log_likelihood(theta)
    return FitResult(
        graphon=SplineGraphon(knots, theta),
        lam=float(lam),
        log_likelihood=ll,
        penalized_log_likelihood=penalized(theta),
        df=df,
        aic_c=aic_c(ll, df, len(des.u)),
        iterations=it,
        converged=converged,
        trace=trace,
    )


def _clean(theta):
    # round-off from the QP can leave box values a hair outside [0, 1]
    return np.clip(theta, 0.0, 1.0)


def select_lambda(u, y, knots: KnotGrid, lambda_grid=DEFAULT_LAMBDAS, controls: FitControls | None = None,
                  warm_start=True) -> FitResult:
    """Fit every grid value (largest first, warm-started) and keep the smallest AIC_c."""
    grid = sorted((float(v) for v in lambda_grid), reverse=True)
    if not grid or grid[-1] < 0:
        raise ValueError("lambda grid must be non-empty and non-negative")
    best, path, prev, errors = None, [], None, []
    for lam in grid:
        try:
            res = fit_theta(u, y, lam, knots, init_theta=prev if warm_start else None, controls=controls)
        except (FitError, InvalidModelError, np.linalg.LinAlgError) as err:
            log.warning("fit failed at lambda=%g: %s", lam, err)
            errors.append((lam, err))
            path.append({"lambda": lam, "error": str(err)})
            continue
        path.append({"lambda": lam, "aic_c": res.aic_c, "df": res.df, "log_lik": res.log_likelihood,
                     "iterations": res.iterations, "converged": res.converged})
        if warm_start:
            prev = res.theta
        if best is None or res.aic_c < best.aic_c:
            best = res
    if best is None:
        raise FitError(f"all {len(grid)} lambda values failed: {errors[0][1]}")
    best.path = path
    return best
