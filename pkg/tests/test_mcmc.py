import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphon_em.bspline import KnotGrid, SplineGraphon
from graphon_em.empirical import normalize_log_density
from graphon_em.graphon import AnalyticGraphon, constant_graphon, get_graphon
from graphon_em.mcmc import (GibbsChain, GibbsConfig, conditional_log_density, expit, gibbs_sweep, log_acceptance,
                             logit, posterior_density, posterior_means, run_chain)
from graphon_em.netsim import sample_latent, sample_network


def direct_ratio(k, u_star, u, w, y, eps=1e-6):
    """Acceptance ratio as a plain product, no logs."""
    r = 1.0
    for j in range(len(u)):
        if j == k:
            continue
        a = min(max(w(u_star, u[j]), eps), 1 - eps)
        b = min(max(w(u[k], u[j]), eps), 1 - eps)
        r *= (a / b) if y[k][j] else ((1 - a) / (1 - b))
    return r * u_star * (1 - u_star) / (u[k] * (1 - u[k]))


def test_log_acceptance_matches_direct_product():
    w = get_graphon("w1")
    rng = np.random.default_rng(0)
    y = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]])
    for _ in range(50):
        u = rng.uniform(0.01, 0.99, 3)
        k = int(rng.integers(3))
        u_star = float(expit(logit(u[k]) + 0.5 * rng.standard_normal()))
        assert log_acceptance(k, u_star, u, w, y) == pytest.approx(math.log(direct_ratio(k, u_star, u, w, y)),
                                                                   abs=1e-10)


@given(c=st.floats(0.05, 0.95), us=st.floats(0.01, 0.99), uk=st.floats(0.01, 0.99))
def test_constant_graphon_only_jacobian_remains(c, us, uk):
    u = np.array([uk, 0.3, 0.8])
    y = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]])
    la = log_acceptance(0, us, u, constant_graphon(c), y)
    assert la == pytest.approx(math.log(us * (1 - us) / (uk * (1 - uk))), abs=1e-10)
    assert log_acceptance(0, uk, u, constant_graphon(c), y) == 0.0


def test_bookkeeping_single_state():
    y = np.array([[0, 1], [1, 0]])
    chain = run_chain([0.3, 0.6], get_graphon("w1"), y, GibbsConfig(n_retain=1, thin=1, burn_in=0))
    assert chain.states.shape == (1, 2) and chain.sweeps == 1


@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=15)
def test_chain_deterministic_and_in_range(seed):
    u0 = sample_latent(15, seed)
    y = sample_network(get_graphon("w2"), u0, seed + 1)
    cfg = GibbsConfig(n_retain=5, burn_in=3, thin=2, seed=seed)
    a = run_chain(u0, get_graphon("w2"), y, cfg)
    b = run_chain(u0, get_graphon("w2"), y, cfg)
    np.testing.assert_array_equal(a.states, b.states)
    assert np.all((a.states > 0) & (a.states < 1))
    assert np.all((a.acceptance_rate >= 0) & (a.acceptance_rate <= 1))


def test_spline_kernel_matches_generic_path():
    # same graphon as a spline and as an opaque analytic function: identical chains
    rng = np.random.default_rng(4)
    A = rng.random((5, 5))
    spline = SplineGraphon(KnotGrid(5), ((A + A.T) / 2).ravel())
    opaque = AnalyticGraphon("opaque", spline._eval)
    u0 = sample_latent(25, 1)
    y = sample_network(spline, u0, 2)
    cfg = GibbsConfig(n_retain=10, burn_in=5, thin=2, seed=9)
    a = run_chain(u0, spline, y, cfg)
    b = run_chain(u0, opaque, y, cfg)
    np.testing.assert_allclose(a.states, b.states, rtol=0, atol=1e-12)
    np.testing.assert_array_equal(a.acceptance_rate, b.acceptance_rate)


def test_sweep_leaves_input_untouched():
    u0 = sample_latent(6, 0)
    y = sample_network(get_graphon("w1"), u0, 1)
    before = u0.copy()
    out = gibbs_sweep(u0, get_graphon("w1"), y, GibbsConfig(), np.random.default_rng(0))
    np.testing.assert_array_equal(u0, before)
    assert not np.array_equal(out, before)


def test_constant_graphon_chain_is_uniform():
    n = 10
    y = sample_network(constant_graphon(0.4), sample_latent(n, 0), 1)
    chain = run_chain(np.full(n, 0.5), constant_graphon(0.4), y,
                      GibbsConfig(n_retain=4000, thin=2, burn_in=20, seed=3, proposal_sd=1.5))
    means = posterior_means(chain)
    # thinned draws are close to independent; allow for autocorrelation with a batch-means SE
    batches = chain.states.reshape(40, 100, n).mean(axis=1)
    se = batches.std(axis=0, ddof=1) / np.sqrt(40)
    assert np.all(np.abs(means - 0.5) < 3 * se + 1e-3)
    iid = np.random.default_rng(5).random(chain.states.shape)
    assert abs(chain.states.var() - iid.var()) < 0.01


def test_posterior_density_constant_graphon_uniform():
    y = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]])
    chain = run_chain([0.2, 0.5, 0.8], constant_graphon(0.3), y, GibbsConfig(n_retain=3, burn_in=0))
    d = posterior_density(chain, constant_graphon(0.3), y, 1)
    np.testing.assert_allclose(d.values, 1.0)


def brute_conditional(grid, k, state, w, y, eps=1e-6):
    vals = []
    for x in grid:
        lp = 0.0
        for j in range(len(state)):
            if j == k:
                continue
            p = min(max(w(x, state[j]), eps), 1 - eps)
            lp += math.log(p) if y[k][j] else math.log(1 - p)
        vals.append(math.exp(lp))
    vals = np.array(vals)
    h = grid[1] - grid[0]
    return vals / (h * (vals.sum() - 0.5 * (vals[0] + vals[-1])))


def test_posterior_density_hand_average():
    w = get_graphon("w2")
    y = np.array([[0, 1, 1, 0], [1, 0, 0, 1], [1, 0, 0, 1], [0, 1, 1, 0]])
    states = np.array([[0.1, 0.4, 0.6, 0.9], [0.3, 0.2, 0.7, 0.5], [0.8, 0.6, 0.1, 0.3]])
    chain = GibbsChain(states=states, acceptance_rate=np.zeros(4), config=GibbsConfig())
    grid = np.linspace(0, 1, 51)
    d = posterior_density(chain, w, y, 2, grid=51)
    expected = np.mean([brute_conditional(grid, 2, s, w, y) for s in states], axis=0)
    np.testing.assert_allclose(d.values, expected, rtol=1e-10)
    single = GibbsChain(states=states[:1], acceptance_rate=np.zeros(4), config=GibbsConfig())
    np.testing.assert_allclose(posterior_density(single, w, y, 2, grid=51).values,
                               normalize_log_density(grid, conditional_log_density(grid, 2, states[0], w, y)).values)


def test_posterior_means_examples():
    cfg = GibbsConfig()
    one = GibbsChain(np.array([[0.2, 0.7]]), np.zeros(2), cfg)
    np.testing.assert_array_equal(posterior_means(one), [0.2, 0.7])
    two = GibbsChain(np.array([[0.2, 0.6], [0.4, 0.8]]), np.zeros(2), cfg)
    np.testing.assert_allclose(posterior_means(two), [0.3, 0.7])
    same = GibbsChain(np.tile([0.1, 0.5], (4, 1)), np.zeros(2), cfg)
    np.testing.assert_allclose(posterior_means(same), [0.1, 0.5])


def test_config_and_state_validation():
    with pytest.raises(ValueError):
        GibbsConfig(proposal_sd=0)
    with pytest.raises(ValueError):
        GibbsConfig(thin=0)
    y = np.array([[0, 1], [1, 0]])
    with pytest.raises(ValueError):
        run_chain([0.0, 0.5], get_graphon("w1"), y, GibbsConfig())
    with pytest.raises(ValueError):
        run_chain([0.5], get_graphon("w1"), y, GibbsConfig())
