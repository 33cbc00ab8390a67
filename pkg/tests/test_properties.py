"""Property-based checks of the structural invariants."""

import json
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from specvar import brownian, chain, cli, cts, spectral
from specvar import measures as M
from specvar.errors import OutOfRange
from specvar.variance_class import variance_routes

from conftest import random_mixture

SLOW = settings(max_examples=15, deadline=None, suppress_health_check=[HealthCheck.too_slow])
FAST = settings(max_examples=60, deadline=None)

seeds = st.integers(0, 2 ** 32 - 1)


@SLOW
@given(seeds)
def test_total_mass_integral(seed):
    mu = random_mixture(np.random.default_rng(seed))
    got = complex(M.integrate(mu, lambda z, w: np.ones_like(z)))
    assert got.real == pytest.approx(mu.total_mass, rel=1e-10)
    assert abs(got.imag) < 1e-12 * mu.total_mass


@SLOW
@given(seeds, st.lists(st.floats(-2, 2), min_size=1, max_size=6))
def test_polynomial_conjugation_symmetry(seed, coef):
    mu = random_mixture(np.random.default_rng(seed))
    p = np.polynomial.Polynomial(coef)
    a = complex(M.integrate(mu, lambda z, w: p(z)))
    b = complex(M.integrate(mu, lambda z, w: p(np.conj(z))))
    assert abs(a - np.conj(b)) <= 1e-9 * (1 + abs(a))
    # a symmetric measure integrates real polynomials to real values
    assert abs(a.imag) <= 1e-9 * (1 + abs(a))


@SLOW
@given(seeds, st.floats(1e-4, math.pi), st.floats(1e-4, math.pi))
def test_wedge_mass_monotone(seed, x1, x2):
    mu = random_mixture(np.random.default_rng(seed))
    lo, hi = sorted((x1, x2))
    assert M.region_mass(mu, M.WedgeU(lo)) <= M.region_mass(mu, M.WedgeU(hi)) + 1e-12


@SLOW
@given(seeds, st.floats(-1, 1), st.floats(0, 1), st.floats(0, 1))
def test_interval_mass_monotone(seed, a, d1, d2):
    mu = random_mixture(np.random.default_rng(seed))
    b1, b2 = sorted((min(a + d1, 1.0), min(a + d2, 1.0)))
    assert M.region_mass(mu, M.Interval(a, b1)) <= M.region_mass(mu, M.Interval(a, b2)) + 1e-12


@SLOW
@given(seeds)
def test_measure_round_trip(seed):
    mu = random_mixture(np.random.default_rng(seed))
    doc = M.measure_to_dict(mu)
    again = M.measure_to_dict(M.measure_from_dict(json.loads(json.dumps(doc))))
    assert again == doc


@SLOW
@given(seeds, st.lists(st.floats(0.01, 2 * math.pi - 0.01), min_size=1, max_size=8))
def test_spectral_density_nonnegative(seed, ts):
    mu = random_mixture(np.random.default_rng(seed)).interior()
    assert np.all(spectral.spectral_density(mu, np.array(ts)) >= 0.0)


@settings(max_examples=8, deadline=None)
@given(seeds, st.integers(1, 64))
def test_three_variance_routes(seed, n):
    mu = random_mixture(np.random.default_rng(seed))
    r = variance_routes(mu, n)
    a = r["covariance-sum"]
    assert r["kernel"] == pytest.approx(a, rel=1e-9, abs=1e-9 * mu.total_mass)
    assert r["martingale"] == pytest.approx(a, rel=1e-9, abs=1e-9 * mu.total_mass)


@settings(max_examples=10, deadline=None)
@given(st.floats(-3.0, -0.05), st.floats(0.0, 3.0), st.floats(0.1, 30.0))
def test_cts_variance_routes(a, b, T):
    mu = M.atom(complex(a, b), 0.5, M.HALF_PLANE) + M.atom(complex(a, -b), 0.5, M.HALF_PLANE)
    assert cts.cts_variance(mu, T) == pytest.approx(cts.cts_variance_by_time_integral(mu, T), rel=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.3, 6.0), seeds)
def test_chain_block_invariants(beta, seed):
    m = chain.build_chain("power", beta=beta)
    assert m.theta > 1.0
    blk = chain.simulate_blocks(m, 500, seed=seed)
    assert np.all(blk.tau >= 1) and np.all(np.abs(blk.site) <= 1.0)


@FAST
@given(st.floats(allow_nan=False, allow_infinity=False, width=64))
def test_json_floats_survive(v):
    doc = json.loads(cli.dump_json({"v": v}))
    assert doc["v"] == v


@FAST
@given(st.floats(-1.0, 1.0), st.integers(0, 10 ** 6))
def test_wos_config_bounds(eps, steps):
    ok = 0.0 < eps < 0.1 and steps >= 1000
    try:
        brownian.WosConfig(epsilon=eps, max_steps=steps)
    except OutOfRange:
        assert not ok
    else:
        assert ok


@FAST
@given(st.floats(-5, -1e-3), st.floats(-5, 5), st.floats(1e-3, 10))
def test_cauchy_probability_in_unit_interval(a, b, x):
    p = brownian.cauchy_exit_probability(complex(a, b), x)
    assert 0.0 <= p <= 1.0
    assert p == pytest.approx(brownian.cauchy_exit_probability(complex(a, -b), x))
