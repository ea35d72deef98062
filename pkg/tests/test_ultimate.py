import math

import numpy as np
import pytest

from skruin import (
    GriddedDistribution,
    GridSpec,
    NumericalError,
    PreconditionError,
    SchemeSpec,
    adjustment_coefficient,
    build_net_usage,
    lundberg_bound,
    solve_survival,
    solve_ultimate_ruin,
    ultimate_ruin_mc_estimate,
)
from skruin import ultimate as ult


def laplace_walk(lam=1.0, mu=0.5, step=0.01):
    """Z = X - Y with X ~ Exp(rate lam), Y ~ Exp(rate mu).

    Exponential upward jumps give the exact ruin probability
    (mu / lam) exp(-(lam - mu) b).
    """
    z = np.arange(int(-80 / step), int(40 / step) + 1) * step
    c = lam * mu / (lam + mu)
    pdf = np.where(z >= 0, c * np.exp(-lam * np.maximum(z, 0)), c * np.exp(mu * np.minimum(z, 0)))
    cdf = np.where(z < 0, lam / (lam + mu) * np.exp(mu * np.minimum(z, 0)),
                   1 - mu / (lam + mu) * np.exp(-lam * np.maximum(z, 0)))
    return GriddedDistribution(float(z[0]), step, pdf, cdf)


@pytest.fixture(scope="module")
def curves(rand_dists):
    return {p: solve_ultimate_ruin(d) for p, d in rand_dists.items()}


@pytest.mark.parametrize("lam,mu", [(1.0, 0.5), (2.0, 0.3)])
def test_exact_exponential_walk(lam, mu):
    d = laplace_walk(lam, mu)
    assert adjustment_coefficient(d).r_star == pytest.approx(lam - mu, rel=1e-5)
    b = np.array([0.05, 0.5, 1.0, 3.0, 7.5, 15.0])
    exact = mu / lam * np.exp(-(lam - mu) * b)
    c1 = solve_ultimate_ruin(d, node_step=0.1)
    c2 = solve_ultimate_ruin(d, node_step=0.05)
    e1 = np.abs(c1.evaluate(b) - exact).max()
    e2 = np.abs(c2.evaluate(b) - exact).max()
    assert e2 < 1e-4
    # second-order convergence in the node spacing
    assert 3.0 < e1 / e2 < 5.0


def test_reference_values(curves):
    assert curves[0.1].evaluate(20.0) == pytest.approx(1.47393e-3, rel=1e-4)
    assert curves[0.35].evaluate(20.0) == pytest.approx(0.831430, abs=5e-5)


def test_curve_invariants(curves):
    for c in curves.values():
        assert np.all((c.psi >= 0) & (c.psi <= 1))
        assert np.all(np.diff(c.psi) <= 1e-10)
        assert c.max_clamp < 1e-6
        assert c.condition < 1e12
        assert c.evaluate(0.0) == 1.0
        assert c.evaluate(-1.0) == 1.0


def test_nodes_reproduced_by_interpolant(curves):
    c = curves[0.1]
    k = np.array([1, 5, 50, 200])
    np.testing.assert_allclose(c.evaluate(c.budgets[k]), c.psi[k], atol=1e-13)


def test_lundberg_dominance(curves):
    for c in curves.values():
        b = np.arange(0.0, 60.0, 0.05)
        assert np.all(lundberg_bound(c.r_star, b) >= c.evaluate(b) - 1e-12)


@pytest.mark.parametrize("p", [0.1, 0.35])
def test_node_doubling(rand_dists, curves, p):
    c = curves[p]
    n = c.budgets.size - 1
    coarse = solve_ultimate_ruin(rand_dists[p], nodes=n // 2, s_max=c.s_max)
    fine = solve_ultimate_ruin(rand_dists[p], nodes=2 * (n // 2), s_max=c.s_max)
    b = np.arange(0.5, 40.0, 0.5)
    assert np.abs(coarse.evaluate(b) - fine.evaluate(b)).max() < 1e-3


def test_finite_horizon_below_ultimate(rand_dists, curves):
    d = rand_dists[0.35]
    s = solve_survival(d, GridSpec(0.0, 30.0, 0.01, 120))
    b = np.arange(1.0, 30.0, 1.0)
    prev = np.zeros_like(b)
    for t in range(0, 121, 10):
        cur = s.outage(t, b)
        assert np.all(cur >= prev - 1e-12)
        assert np.all(cur <= curves[0.35].evaluate(b) + 5e-3)
        prev = cur


def test_certain_ruin_regime(det_dist, link):
    c = solve_ultimate_ruin(det_dist)
    assert c.certain
    np.testing.assert_array_equal(c.evaluate([0.0, 10.0, 1e4]), 1.0)
    c = solve_ultimate_ruin(build_net_usage(link, SchemeSpec.random_tx(0.5)))
    assert c.certain


def test_no_transmission_never_ruins(link):
    c = solve_ultimate_ruin(build_net_usage(link, SchemeSpec.random_tx(0.0)))
    assert not c.certain
    assert c.evaluate(5.0) == 0.0


def test_ill_conditioning_detected(rand_dists, monkeypatch):
    monkeypatch.setattr(ult, "COND_LIMIT", 10.0)
    with pytest.raises(NumericalError, match="condition"):
        solve_ultimate_ruin(rand_dists[0.1])


def test_s_max_from_lundberg(curves):
    c = curves[0.1]
    assert c.s_max >= -math.log(1e-10) / c.r_star - c.node_step
    assert c.psi[-1] < 1e-9


def test_mc_proxy(link, curves):
    est = ultimate_ruin_mc_estimate(link, SchemeSpec.random_tx(0.1), 30.0, horizon=150, trials=200_000, seed=5)
    assert est.value <= lundberg_bound(curves[0.1].r_star, 30.0)
    est = ultimate_ruin_mc_estimate(link, SchemeSpec.random_tx(0.1), 5.0, horizon=150, trials=200_000, seed=5)
    assert abs(est.value - curves[0.1].evaluate(5.0)) < 4 * est.se
    zero = ultimate_ruin_mc_estimate(link, SchemeSpec.random_tx(0.1), 0.0, horizon=150, trials=1000)
    assert zero.value == 1.0


def test_mc_proxy_requires_random_scheme(link):
    with pytest.raises(PreconditionError):
        ultimate_ruin_mc_estimate(link, SchemeSpec.deterministic(), 5.0, trials=10)
