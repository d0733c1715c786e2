"""Primal active-set solver for small dense convex quadratic programs.

Solves::

    minimize    1/2 x'Qx - c'x
    subject to  A_eq x  = b_eq
                A_in x >= b_in

A feasible start is either supplied or found by a phase-1 linear program
that minimises the largest constraint violation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linprog

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
MAX_ITER = "max-iterations"


@dataclass
class QuadraticProgram:
    Q: np.ndarray
    c: np.ndarray
    A_eq: np.ndarray = None
    b_eq: np.ndarray = None
    A_in: np.ndarray = None
    b_in: np.ndarray = None

    def __post_init__(self):
        self.Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        n = self.Q.shape[0]
        if self.Q.shape != (n, n):
            raise ValueError("Q must be square")
        if not np.allclose(self.Q, self.Q.T, atol=1e-10, rtol=0):
            raise ValueError("Q must be symmetric")
        self.c = np.asarray(self.c, dtype=float).reshape(n)
        self.A_eq, self.b_eq = _system(self.A_eq, self.b_eq, n, "equality")
        self.A_in, self.b_in = _system(self.A_in, self.b_in, n, "inequality")

    @property
    def n(self):
        return self.Q.shape[0]

    def objective(self, x):
        return 0.5 * x @ self.Q @ x - self.c @ x


def _system(A, b, n, what):
    if A is None:
        return np.zeros((0, n)), np.zeros(0)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if A.shape[1] != n or A.shape[0] != b.shape[0]:
        raise ValueError(f"{what} system has inconsistent dimensions")
    return A, b


@dataclass
class QPSolution:
    x: np.ndarray
    status: str
    active_set: list = field(default_factory=list)
    objective: float = np.nan
    iterations: int = 0
    multipliers_eq: np.ndarray = None
    multipliers_in: np.ndarray = None
    history: list = field(default_factory=list)

    @property
    def ok(self):
        return self.status == OPTIMAL


def _independent_rows(A, base=None, rtol=1e-10):
    """Indices of a maximal subset of rows of ``A`` independent of ``base``."""
    if A.shape[0] == 0:
        return []
    R = A
    if base is not None and base.shape[0]:
        basis = sla.orth(base.T)
        R = A - (A @ basis) @ basis.T
    _, r, piv = sla.qr(R.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    scale = max(1.0, np.abs(A).max())
    rank = int(np.sum(diag > rtol * scale * max(A.shape)))
    return sorted(int(i) for i in piv[:rank])


def _project(x, A, b):
    """Minimal-norm correction putting ``x`` exactly on ``A x = b``."""
    if A.shape[0] == 0:
        return x
    r = b - A @ x
    if not np.any(r):
        return x
    return x + np.linalg.lstsq(A, r, rcond=None)[0]


def _kkt_step(Q, g, A_w):
    n = Q.shape[0]
    m = A_w.shape[0]
    if m == 0:
        try:
            return sla.solve(Q, -g, assume_a="pos"), np.zeros(0)
        except (np.linalg.LinAlgError, sla.LinAlgError):
            return np.linalg.lstsq(Q, -g, rcond=None)[0], np.zeros(0)
    K = np.block([[Q, A_w.T], [A_w, np.zeros((m, m))]])
    rhs = np.concatenate([-g, np.zeros(m)])
    try:
        sol = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
    # Q p + A_w' nu = -g  =>  multipliers of "a'x >= b" rows are -nu
    return sol[:n], -sol[n:]


def _active_set(Q, c, A_eq, A_in, b_in, x, working, tol, max_iter):
    """Core iteration from a feasible ``x``; ``working`` lists inequality rows."""
    eq_rows = _independent_rows(A_eq)
    A_eq = A_eq[eq_rows]
    meq = A_eq.shape[0]
    W = list(working)
    history = [0.5 * x @ Q @ x - c @ x]
    status = MAX_ITER
    mu = np.zeros(0)
    nu_in = np.zeros(len(W))
    it = 0
    for it in range(1, max_iter + 1):
        g = Q @ x - c
        A_w = np.vstack([A_eq, A_in[W]]) if W else A_eq
        p, lam = _kkt_step(Q, g, A_w)
        mu, nu_in = lam[:meq], lam[meq:]
        scale = max(1.0, np.abs(g).max(), np.abs(c).max())
        if np.abs(p).max() <= tol * max(1.0, np.abs(x).max()):
            if not W or nu_in.min() >= -tol * scale:
                status = OPTIMAL
                break
            W.pop(int(np.argmin(nu_in)))
            continue
        Ap = A_in @ p
        alpha, block = 1.0, None
        slack = np.maximum(A_in @ x - b_in, 0.0)
        inW = np.zeros(A_in.shape[0], dtype=bool)
        inW[W] = True
        cand = np.flatnonzero(~inW & (Ap < -1e-14 * max(1.0, np.abs(p).max())))
        if cand.size:
            steps = slack[cand] / -Ap[cand]
            j = int(np.argmin(steps))
            if steps[j] < alpha:
                alpha, block = float(steps[j]), int(cand[j])
        x = x + alpha * p
        history.append(0.5 * x @ Q @ x - c @ x)
        if block is not None:
            W.append(block)
    return x, status, W, mu, nu_in, it, history, eq_rows


def _phase_one(p: QuadraticProgram, tol):
    """Feasible point from the LP  min t  s.t.  A_in x + t >= b_in, A_eq x = b_eq, t >= 0.

    Returns None when the smallest achievable violation exceeds ``tol``.
    """
    n = p.n
    m_in = p.A_in.shape[0]
    cost = np.zeros(n + 1)
    cost[n] = 1.0
    res = linprog(
        cost,
        A_ub=np.hstack([-p.A_in, -np.ones((m_in, 1))]) if m_in else None,
        b_ub=-p.b_in if m_in else None,
        A_eq=np.hstack([p.A_eq, np.zeros((p.A_eq.shape[0], 1))]) if p.A_eq.shape[0] else None,
        b_eq=p.b_eq if p.A_eq.shape[0] else None,
        bounds=[(None, None)] * n + [(0, None)],
        method="highs",
    )
    if res.status != 0 or res.x[n] > tol:
        return None
    return res.x[:n]


def solve_qp(p: QuadraticProgram, tol=1e-8, max_iter=None, x0=None) -> QPSolution:
    """Solve ``p`` with the primal active-set method.

    ``x0`` is an optional starting point; if it is feasible it is used
    directly (with the constraints active there as initial working set),
    otherwise phase 1 runs from it.
    """
    n = p.n
    m_all = p.A_eq.shape[0] + p.A_in.shape[0]
    if max_iter is None:
        max_iter = 10 * (n + m_all)
    Q = p.Q
    evmin = np.linalg.eigvalsh(Q).min()
    if evmin < -1e-8:
        raise ValueError(f"Q is not positive semidefinite (min eigenvalue {evmin:.3g})")
    if evmin < 1e-10:
        Q = Q + 1e-10 * np.eye(n)
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()

    feas_tol = tol * max(1.0, np.abs(p.b_in).max(initial=0.0), np.abs(p.b_eq).max(initial=0.0))
    feasible = (
        np.all(p.A_in @ x - p.b_in >= -feas_tol)
        and np.all(np.abs(p.A_eq @ x - p.b_eq) <= feas_tol)
    )
    act_tol = feas_tol
    if not feasible:
        x = _phase_one(p, 1e-7 * max(1.0, feas_tol / tol))
        if x is None:
            return QPSolution(np.full(n, np.nan), INFEASIBLE)
        # the LP vertex is feasible to solver precision; rows within that band
        # become active and are made exact by the projection below
        act_tol = 1e-7 * max(1.0, feas_tol / tol)
    act = np.flatnonzero(p.A_in @ x - p.b_in <= act_tol)
    working = [int(i) for i in act[_independent_rows(p.A_in[act], p.A_eq)]] if act.size else []
    x = _project(x, np.vstack([p.A_eq, p.A_in[working]]), np.concatenate([p.b_eq, p.b_in[working]]))
    x, status, W, mu, nu_in, it, history, eq_rows = _active_set(
        Q, p.c, p.A_eq, p.A_in, p.b_in, x, working, tol, max_iter
    )
    mult_eq = np.zeros(p.A_eq.shape[0])
    mult_eq[eq_rows] = mu
    mult_in = np.zeros(p.A_in.shape[0])
    if len(W):
        mult_in[W] = nu_in
    return QPSolution(
        x=x,
        status=status,
        active_set=sorted(W),
        objective=float(p.objective(x)),
        iterations=it,
        multipliers_eq=mult_eq,
        multipliers_in=mult_in,
        history=history,
    )


def kkt_residuals(p: QuadraticProgram, sol: QPSolution) -> dict:
    """Primal feasibility, stationarity and complementarity residuals."""
    x = sol.x
    grad = p.Q @ x - p.c
    stat = grad - p.A_eq.T @ sol.multipliers_eq - p.A_in.T @ sol.multipliers_in
    slack = p.A_in @ x - p.b_in
    return {
        "eq": float(np.abs(p.A_eq @ x - p.b_eq).max(initial=0.0)),
        "in": float(max(0.0, -slack.min(initial=0.0))),
        "stationarity": float(np.abs(stat).max()),
        "dual": float(max(0.0, -sol.multipliers_in.min(initial=0.0))),
        "complementarity": float(np.abs(sol.multipliers_in * slack).max(initial=0.0)),
    }
