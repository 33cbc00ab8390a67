import math

import numpy as np
import pytest
from scipy import stats

from specvar import chain, spectral
from specvar import measures as M
from specvar.errors import OutOfRange, PreconditionFailed, ThetaInfinite
from specvar.variance_class import variance_of_partial_sum


@pytest.fixture(scope="module")
def tri():
    return chain.build_chain("triangular")


@pytest.fixture(scope="module")
def niu():
    return chain.build_chain("defniu", a=0.25)


@pytest.fixture(scope="module")
def esl():
    return chain.build_chain("expsqrtlog")


def test_triangular_model(tri):
    assert tri.theta == pytest.approx(2.0, rel=1e-12)
    assert tri.nu.total_mass == pytest.approx(1.0)
    # nu is density 1 on [0, 1]
    assert spectral.covariance(tri.nu, 3) == pytest.approx(0.25, rel=1e-10)
    assert np.allclose(tri.mu_density(np.array([-0.9, 0.0, 0.5])), 0.5)


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0, 4.0])
def test_power_family_theta(beta):
    m = chain.build_chain("power", beta=beta)
    assert m.theta == pytest.approx((beta + 1) / beta, rel=1e-10)


def test_uniform_base_law_has_infinite_theta():
    with pytest.raises(ThetaInfinite):
        chain.build_chain("uniform")


def test_unknown_family():
    with pytest.raises(OutOfRange):
        chain.build_chain("zigzag")


def test_defniu_model(niu):
    c = 1 + 2 * 0.25 / 5
    assert niu.norm_const == pytest.approx(c)
    assert niu.theta == pytest.approx(2 / c, rel=1e-10)
    x = np.array([-0.7, 0.2, 0.99, -0.999999])
    L = np.log(1 - np.abs(x))
    assert np.allclose(niu.mu_density(x), 0.5 * (1 + 0.25 * np.sin(L) + 0.25 * np.cos(L)), rtol=1e-12)


def test_operator_identity(niu):
    # cov(n) = int |x|^n mu(dx) for g = sgn
    from scipy.integrate import quad
    for n in [1, 4, 20]:
        direct = 2 * quad(lambda x: x ** n * float(niu.mu_density(np.array([x]))[0]), 0, 1,
                          limit=400, epsabs=0, epsrel=1e-12)[0]
        assert spectral.covariance(niu.nu, n) == pytest.approx(direct, rel=1e-9)


def test_nu_positive_type(niu, esl):
    for m in (niu, esl):
        assert M.region_mass(m.nu, M.Interval(-1.0, 0.0)) == 0.0


def test_expsqrtlog_V_profile(esl):
    for x in np.geomspace(1e-8, 1e-2, 7):
        assert spectral.V_tail(esl.nu, x) == pytest.approx(math.exp(math.sqrt(math.log(1 / x))), rel=0.01)
    assert esl.nu.total_mass == pytest.approx(1.0)


@pytest.mark.parametrize("u", [0.0, 1.0, 4.0, 16.0, 1e3])
def test_triangular_tail(tri, u):
    assert chain.holding_tail(tri, u)["tail"] == pytest.approx(2 / ((u + 1) * (u + 2)), rel=1e-10)


def test_H_matches_time_integral(niu, esl):
    for m in (niu, esl):
        for u in [3.0, 250.0]:
            assert chain.holding_tail(m, u)["H"] == pytest.approx(chain.H_by_time_integral(m, u), rel=1e-7)


def test_H_triangular_asymptote(tri):
    # H(u) = 4 ln u + O(1); the constant is fixed by two large u values
    h1, h2 = (chain.holding_tail(tri, u)["H"] for u in (1e5, 1e7))
    assert (h2 - h1) / (4 * math.log(100)) == pytest.approx(1.0, rel=1e-3)


def test_holding_tail_rejects_negative(tri):
    with pytest.raises(OutOfRange):
        chain.holding_tail(tri, -1.0)


def test_bn_bounded_holding_times():
    m = chain.build_chain("atoms", c=0.5)
    # P(tau > u) = 2^-u, so H(inf) = 2 int u 2^-u du = 2 / ln(2)^2
    n = 1e6
    assert chain.solve_bn(m, n) == pytest.approx(math.sqrt(2 * n) / math.log(2), rel=1e-6)


def test_bn_triangular(tri):
    n = 1e6
    assert chain.solve_bn(tri, n) ** 2 / (2 * n * math.log(n)) == pytest.approx(1.0, rel=0.10)


def test_bn_solves_fixed_point(esl):
    n = 5e5
    b = chain.solve_bn(esl, n)
    assert b * b == pytest.approx(n * chain.holding_tail(esl, b)["H"], rel=1e-8)


def test_blocks_tail_frequencies(tri):
    blk = chain.simulate_blocks(tri, 100_000, seed=11)
    assert np.all(blk.tau >= 1) and np.all(np.abs(blk.site) <= 1)
    for u in [1, 4, 16]:
        p = 2 / ((u + 1) * (u + 2))
        se = math.sqrt(p * (1 - p) / blk.tau.size)
        assert abs(np.mean(blk.tau > u) - p) < 3 * se


@pytest.mark.parametrize("family,params", [("power", {"beta": 3.0}), ("atoms", {"c": 0.6})])
def test_blocks_mean_holding_is_theta(family, params):
    m = chain.build_chain(family, **params)
    blk = chain.simulate_blocks(m, 100_000, seed=5)
    se = blk.tau.std() / math.sqrt(blk.tau.size)
    assert abs(blk.tau.mean() - m.theta) < 3 * se


def test_site_zero_holds_one_step():
    m = chain.build_chain("atoms", c=0.0)
    blk = chain.simulate_blocks(m, 1000, seed=1)
    assert np.all(blk.tau == 1)


def test_path_states_are_signs_and_stationary(tri):
    n, paths, nbins = 20, 3000, 20
    final = np.zeros(nbins, dtype=np.int64)
    for i in range(paths):
        s, h = chain.simulate_path(tri, n, seed=99, index=i, nbins=nbins)
        _, h0 = chain.simulate_path(tri, n - 1, seed=99, index=i, nbins=nbins)
        assert abs(s) <= n and (s - n) % 2 == 0
        final += h - h0
    # the state after n steps is a single draw; mu is uniform on [-1, 1]
    assert stats.chisquare(final).pvalue > 0.01


def test_blocks_and_path_agree_in_law(tri):
    n = 5000
    fast = chain.simulate_partial_sums(tri, n, 500, seed=3)
    slow = np.array([chain.simulate_path(tri, n, seed=4, index=i)[0] for i in range(500)])
    assert stats.ks_2samp(fast, slow).pvalue > 0.01


def test_empirical_variance_matches_spectral():
    m = chain.build_chain("power", beta=3.0)
    n, reps = 1000, 4000
    s = chain.simulate_partial_sums(m, n, reps, seed=17).astype(float)
    exact = variance_of_partial_sum(m.nu, n)
    se = (s * s).std() / math.sqrt(reps)
    assert abs(np.mean(s * s) - exact) < 3 * se


def test_partial_sums_reproducible(tri):
    a = chain.simulate_partial_sums(tri, 10_000, 50, seed=8)
    b = chain.simulate_partial_sums(tri, 10_000, 50, seed=8)
    c = chain.simulate_partial_sums(tri, 10_000, 50, seed=9)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_clt_report_fields(tri):
    rep = chain.clt_experiment(tri, 10_000, 200, seed=2)
    assert 0.0 <= rep.ks <= 1.0 and rep.replications == 200 and rep.seed == 2
    assert rep.b == pytest.approx(chain.solve_bn(tri, 5000))
    with pytest.raises(OutOfRange):
        chain.clt_experiment(tri, 10_000, 50, seed=2)


def test_lemma_precondition():
    with pytest.raises(PreconditionFailed):
        chain.lemma_aux_check(chain.build_chain("power", beta=2.0))


def test_lemma_profile_triangular_closed_form(tri):
    rep = chain.lemma_aux_check(tri, xs=[1e-3, 1e-6])
    for x, h, v, r in rep.rows:
        assert v == pytest.approx(math.log(1 / x), rel=1e-9)
        assert r == pytest.approx(h / (4 * math.log(1 / x)), rel=1e-12)
