import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, optimize

from skruin import (
    DomainError,
    GriddedDistribution,
    PreconditionError,
    SchemeSpec,
    adjustment_coefficient,
    bound_psi,
    bound_psi_hat,
    build_net_usage,
    critical_tx_prob,
    lundberg_bound,
)
from skruin import channels as ch
from skruin.bounds import log_mgf
from skruin.montecarlo import sample_increments


def _exact_r_star(link, p):
    """Root of the continuous mixture MGF, by quadrature on the rate densities."""
    def mgf(r):
        a = integrate.quad(lambda t: math.exp(-r * t) * float(ch.skg_rate_pdf(link, t)), 0, 80, limit=400)[0]
        b = integrate.quad(lambda t: math.exp(r * t) * float(ch.tx_rate_pdf(link.tx, t)), 0, 40, limit=400)[0]
        return (1 - p) * a + p * b - 1.0

    return optimize.brentq(mgf, 1e-4, 2.0, xtol=1e-13)


def test_psi_hat_reference(det_dist):
    assert bound_psi_hat(det_dist, 15, 50.0) == pytest.approx(0.795491, abs=1e-5)


def test_psi_hat_zero_drift():
    z = np.linspace(-1, 1, 201)
    pdf = 1.0 - np.abs(z)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (pdf[1:] + pdf[:-1]) * 0.01)])
    d = GriddedDistribution(-1.0, 0.01, pdf / cdf[-1], cdf / cdf[-1])
    assert abs(d.mean()) < 1e-12
    for t, b0 in ((1, 1.0), (10, 3.0), (40, 2.5)):
        assert bound_psi_hat(d, t, b0) == pytest.approx(math.sqrt(t * d.var()) / b0, rel=1e-9)


def test_domain_errors(det_dist):
    with pytest.raises(DomainError):
        bound_psi_hat(det_dist, 5, 0.0)
    with pytest.raises(DomainError):
        bound_psi(det_dist, 5, -1.0, trials=10)
    with pytest.raises(DomainError):
        lundberg_bound(0.3, -1.0)


def test_psi_t_zero_horizon(det_dist):
    assert bound_psi(det_dist, 0, 10.0, trials=10).value == 0.0


def test_example_endpoints(det_dist, det_surface):
    est = bound_psi(det_dist, 15, 50.0, trials=200_000, seed=3)
    assert 0.11 < est.value < 0.80
    assert det_surface.outage(15, 50.0) <= est.value < bound_psi_hat(det_dist, 15, 50.0)


def test_bound_chain_random_pairs(det_dist, det_surface):
    rng = np.random.default_rng(7)
    for _ in range(50):
        t = int(rng.integers(1, 31))
        b0 = float(np.round(rng.uniform(1.0, 60.0), 2))
        est = bound_psi(det_dist, t, b0, trials=20_000, seed=int(rng.integers(1 << 30)))
        psi = det_surface.outage(t, b0)
        assert psi <= est.value + 4 * est.se
        assert est.value < bound_psi_hat(det_dist, t, b0)


@pytest.mark.parametrize("p", [0.1, 0.35])
def test_adjustment_coefficient_residual_and_oracle(link, rand_dists, p):
    coef = adjustment_coefficient(rand_dists[p])
    assert coef.residual <= 1e-10
    assert coef.r_star == pytest.approx(_exact_r_star(link, p), rel=2e-5)


def test_adjustment_coefficient_reference(rand_dists):
    assert adjustment_coefficient(rand_dists[0.1]).r_star == pytest.approx(0.288861, abs=2e-6)
    assert adjustment_coefficient(rand_dists[0.35]).r_star == pytest.approx(0.00814291, abs=2e-8)


def test_positive_drift_rejected(det_dist, link):
    with pytest.raises(PreconditionError):
        adjustment_coefficient(det_dist)
    with pytest.raises(PreconditionError):
        adjustment_coefficient(build_net_usage(link, SchemeSpec.random_tx(0.0)))


def test_r_star_vanishes_at_criticality(link):
    pc = critical_tx_prob(link)
    ps = [0.05, 0.15, 0.25, 0.32, 0.35, pc - 0.002, pc - 0.0005]
    dists = [build_net_usage(link, SchemeSpec.random_tx(p), step=0.02) for p in ps]
    rs = [adjustment_coefficient(d).r_star for d in dists]
    assert np.all(np.diff(rs) < 0)
    # small-drift limit r* ~ 2 |E[Z]| / Var(Z)
    d = dists[-1]
    assert rs[-1] == pytest.approx(2 * abs(d.mean()) / d.var(), rel=0.01)
    assert rs[-1] < 1e-3


@pytest.mark.parametrize("p", [0.1, 0.35])
def test_log_mgf_convex(rand_dists, p):
    d = rand_dists[p]
    r_star = adjustment_coefficient(d).r_star
    r = np.linspace(-0.5, 2 * r_star, 100)
    g = np.array([log_mgf(d, x) for x in r])
    assert np.all(np.diff(g, 2) >= -1e-9)


def test_lundberg_values():
    assert lundberg_bound(0.3, 0.0) == 1.0
    np.testing.assert_allclose(lundberg_bound(0.3, [1.0, 2.0]), np.exp([-0.3, -0.6]))


def test_deterministic_drift_is_positive_in_simulation(link):
    z = sample_increments(link, SchemeSpec.deterministic(), 200_000, t_max=3, seed=11)
    means = z.mean(axis=0)
    se = z.std(axis=0) / math.sqrt(z.shape[0])
    assert np.all(means - 4 * se > 0)


@settings(max_examples=15, deadline=None)
@given(t=st.integers(0, 200), b0=st.floats(0.5, 500))
def test_psi_hat_closed_form(det_dist, t, b0):
    m, v = det_dist.mean(), det_dist.var()
    assert bound_psi_hat(det_dist, t, b0) == pytest.approx(math.sqrt(t * v + (t * m) ** 2) / b0)
