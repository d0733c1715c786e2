from pathlib import Path

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from graphon_em.bspline import KnotGrid, basis_matrix, constraint_matrices, symmetry_matrix
from graphon_em.empirical import order_by_degree
from graphon_em.fit import (DEFAULT_LAMBDAS, FitError, InvalidModelError, aic_c, difference_matrix,
                            effective_df, fisher, fit_theta, log_likelihood, penalty_matrix, score,
                            select_lambda)
from graphon_em.graphon import constant_graphon, get_graphon
from graphon_em.io import ingest_edge_list
from graphon_em.netsim import edge_density, sample_latent, sample_network
from oracles import naive_fisher, naive_loglik

DATA = Path(__file__).parent / "data"


def instance(seed, n, K, graphon="w1"):
    rng = np.random.default_rng(seed)
    u = sample_latent(n, rng)
    y = sample_network(get_graphon(graphon), u, rng)
    A = rng.uniform(0.05, 0.95, (K, K))
    return u, y, ((A + A.T) / 2).ravel()


def test_penalty_structure():
    L = difference_matrix(4)
    np.testing.assert_array_equal(L[0], [1, -1, 0, 0])
    P = penalty_matrix(4)
    np.testing.assert_array_equal(P, P.T)
    assert np.linalg.eigvalsh(P).min() > -1e-12
    assert np.abs(P @ np.ones(16)).max() == 0.0
    assert np.sum(np.abs(np.linalg.eigvalsh(P)) < 1e-10) == 1


def test_loglik_half():
    u, y, _ = instance(0, 7, 3)
    assert log_likelihood(np.full(9, 0.5), u, y, KnotGrid(3)) == pytest.approx(42 * np.log(0.5))


def test_loglik_perfect_fit():
    # positions at the knots, coefficients equal to the observed edges
    K = 4
    u = np.linspace(0, 1, K)
    y = np.array([[0, 1, 0, 1], [1, 0, 1, 0], [0, 1, 0, 1], [1, 0, 1, 0]])
    theta = y.astype(float).ravel()
    assert log_likelihood(theta, u, y, KnotGrid(K)) >= 12 * np.log(1 - 1e-6) - 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_loglik_matches_double_loop(seed):
    u, y, theta = instance(seed, 6, 3)
    assert log_likelihood(theta, u, y, KnotGrid(3)) == pytest.approx(naive_loglik(theta, 3, u, y), abs=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_score_matches_central_differences(seed):
    u, y, theta = instance(seed, 8, 3)
    knots = KnotGrid(3)
    s = score(theta, u, y, knots)
    h = 1e-6
    fd = np.array([(log_likelihood(theta + h * e, u, y, knots) - log_likelihood(theta - h * e, u, y, knots))
                   / (2 * h) for e in np.eye(9)])
    assert np.linalg.norm(s - fd) / np.linalg.norm(fd) < 1e-4


def test_score_constant_model_mle():
    u = sample_latent(80, 1)
    y = sample_network(constant_graphon(0.3), u, 2)
    p_hat = edge_density(y)
    s = score(np.full(16, p_hat), u, y, KnotGrid(4))
    # d/dc l(c 1) = 1's = sum of entries, zero at the constant MLE
    assert abs(s.sum()) < 1e-8 * np.abs(s).max() + 1e-8


@pytest.mark.parametrize("seed", range(3))
def test_fisher_matches_naive_accumulation(seed):
    u, y, theta = instance(seed, 6, 3)
    np.testing.assert_allclose(fisher(theta, u, y, KnotGrid(3)), naive_fisher(theta, 3, u), atol=1e-10, rtol=1e-12)


@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=25)
def test_fisher_symmetric_psd(seed):
    u, y, theta = instance(seed, 10, 4)
    F = fisher(theta, u, y, KnotGrid(4))
    np.testing.assert_allclose(F, F.T, atol=1e-10)
    assert np.linalg.eigvalsh(F).min() >= -1e-8 * max(1.0, np.abs(F).max())


def test_fisher_two_nodes_low_rank():
    F = fisher(np.full(9, 0.4), [0.2, 0.7], np.array([[0, 1], [1, 0]]), KnotGrid(3))
    assert np.linalg.matrix_rank(F) <= 4


def test_aic_examples():
    assert aic_c(-123.5, 0.0, 20) == pytest.approx(247.0)
    assert aic_c(-60000.0, 50.0, 500) == pytest.approx(120100.02044, abs=1e-5)
    assert aic_c(-60000.0, 50.0, 500) == pytest.approx(120000 + 100 + 2 * 50 * 51 / (249500 - 51), rel=1e-15)
    with pytest.raises(InvalidModelError):
        aic_c(-1.0, 5.0, 3)


def test_df_limits_against_generalised_eigenproblem():
    u, y, _ = instance(3, 40, 4)
    knots = KnotGrid(4)
    fit = fit_theta(u, y, 10.0, knots)
    info = fisher(fit.theta, u, y, knots)
    mu = sla.eigh(penalty_matrix(4), info, eigvals_only=True)
    mu = np.where(np.abs(mu) < 1e-12, 0.0, mu)
    lams = [0.0, 0.1, 10.0, 1e3, 1e10]
    dfs = [effective_df(fit.theta, u, y, lam, knots) for lam in lams]
    for lam, df in zip(lams, dfs):
        assert df == pytest.approx(np.sum(1.0 / (1.0 + lam * mu)), rel=1e-8)
    assert dfs[0] == pytest.approx(16.0, rel=1e-10)
    assert dfs[-1] == pytest.approx(1.0, abs=1e-6)
    assert all(a >= b - 1e-10 for a, b in zip(dfs, dfs[1:]))


def test_erdos_renyi_large_lambda_is_flat():
    u = sample_latent(200, 5)
    y = sample_network(constant_graphon(0.3), u, 6)
    fit = fit_theta(order_by_degree(y).u_hat_emp, y, 1e6, KnotGrid(8))
    _, surf = fit.graphon.grid(101)
    assert np.abs(surf - edge_density(y)).max() < 0.05


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(5, 30), K=st.integers(3, 6),
       lam=st.sampled_from([0.0, 0.1, 10.0, 1e4]), name=st.sampled_from(["w1", "w2"]))
@settings(max_examples=20)
def test_fit_invariants_and_monotone_trace(seed, n, K, lam, name):
    u, y, _ = instance(seed, n, K, name)
    fit = fit_theta(u, y, lam, KnotGrid(K))
    inv = fit.graphon.check_invariants()
    assert inv["symmetry"] <= 1e-8 and inv["box_low"] == 0 and inv["box_high"] == 0
    assert inv["monotone"] <= 1e-8
    pen = [t["penalized"] for t in fit.trace if "penalized" in t]
    assert all(b >= a - 1e-9 * abs(a) for a, b in zip(pen, pen[1:]))
    assert 0 < fit.df <= K * K + 1e-8


def test_projected_score_vanishes_at_interior_optimum():
    u, y, _ = instance(8, 150, 4)
    knots = KnotGrid(4)
    lam = 100.0
    fit = fit_theta(u, y, lam, knots)
    C, b, D = constraint_matrices(knots)
    assert np.min(C @ fit.theta - b) > 1e-4  # no inequality active
    sp = score(fit.theta, u, y, knots) - lam * penalty_matrix(4) @ fit.theta
    null = sla.null_space(symmetry_matrix(4))
    s0 = score(np.full(16, edge_density(y)), u, y, knots)
    assert np.linalg.norm(null.T @ sp) < 1e-4 * np.linalg.norm(s0)


def test_converges_when_fitted_values_hit_the_clip():
    # sparse corner drives w below 1e-6 on non-edges; the scoring step must
    # treat those pairs as flat or it stalls with |delta| > tol
    net = ingest_edge_list(DATA / "ego333.txt")
    u = order_by_degree(net.y).u_hat_emp
    knots = KnotGrid(12)
    fit = select_lambda(u, net.y, knots, (1e6, 1e5, 1e4, 1e3))
    assert all(p["converged"] for p in fit.path)
    Bu = basis_matrix(knots, u)
    assert np.min(Bu @ fit.theta.reshape(12, 12) @ Bu.T) < 1e-6


def test_warm_start_validation():
    u, y, _ = instance(0, 10, 3)
    bad = np.arange(9) / 10.0  # asymmetric
    with pytest.raises(FitError):
        fit_theta(u, y, 1.0, KnotGrid(3), init_theta=bad)
    with pytest.raises(ValueError):
        fit_theta(u, y, -1.0, KnotGrid(3))


def test_select_lambda_single_point_and_argmin():
    u, y, _ = instance(2, 40, 4)
    knots = KnotGrid(4)
    one = select_lambda(u, y, knots, [10.0])
    direct = fit_theta(u, y, 10.0, knots)
    assert one.lam == 10.0 and one.aic_c == pytest.approx(direct.aic_c, rel=1e-6)
    full = select_lambda(u, y, knots)
    assert full.aic_c == min(p["aic_c"] for p in full.path)
    assert len(full.path) == len(DEFAULT_LAMBDAS)


def test_select_lambda_w1_beats_endpoints():
    u = sample_latent(500, 21)
    y = sample_network(get_graphon("w1"), u, 22)
    fit = select_lambda(order_by_degree(y).u_hat_emp, y, KnotGrid(12))
    by_lam = {p["lambda"]: p["aic_c"] for p in fit.path}
    assert fit.aic_c <= by_lam[min(by_lam)] and fit.aic_c <= by_lam[max(by_lam)]


def test_select_lambda_erdos_renyi_prefers_heavy_penalty():
    # positions drawn independently of y; degree-sorted positions are a different story (see README)
    hits = 0
    for rep in range(20):
        u = sample_latent(200, 100 + rep)
        y = sample_network(constant_graphon(0.3), u, 200 + rep)
        fit = select_lambda(u, y, KnotGrid(12))
        hits += fit.lam == max(DEFAULT_LAMBDAS)
    assert hits >= 16
