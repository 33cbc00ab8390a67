import math

import numpy as np
import pytest

from specvar import cts
from specvar import measures as M
from specvar.errors import DomainMismatch, OutOfRange
from specvar.variance_class import Verdict

H = M.HALF_PLANE


def exp_variance(a, T):
    # covariance e^{-a t}: 2 int_0^T (T - s) e^{-a s} ds
    return 2.0 * (math.expm1(-a * T) + a * T) / (a * a)


@pytest.mark.parametrize("a", [1.0, 0.25, 3.0])
@pytest.mark.parametrize("T", [1e-3, 0.5, 10.0, 1000.0])
def test_variance_of_real_atom(a, T):
    got = cts.cts_variance(M.atom(-a, domain=H), T)
    assert got == pytest.approx(exp_variance(a, T), rel=1e-12)


def test_covariance_of_atom_pair():
    m = M.atom(-1 + 2j, 0.5, domain=H) + M.atom(-1 - 2j, 0.5, domain=H)
    for t in [0.0, 0.3, 2.0]:
        assert cts.cts_covariance(m, t) == pytest.approx(math.exp(-t) * math.cos(2 * t), abs=1e-15)


def test_covariance_of_imaginary_segment():
    # uniform on (-ih, ih): sin(h t)/(h t)
    m = M.imaginary_segment(2.0)
    for t in [0.1, 1.0, 5.0]:
        assert cts.cts_covariance(m, t) == pytest.approx(math.sin(2 * t) / (2 * t), rel=1e-10)


def test_variance_two_routes_agree():
    m = M.atom(-0.5 + 1j, 0.5, domain=H) + M.atom(-0.5 - 1j, 0.5, domain=H) \
        + M.real_segment(-2.0, -0.1, 0.7) + M.imaginary_segment(1.5, 0.4)
    for T in [0.5, 5.0, 30.0]:
        assert cts.cts_variance(m, T) == pytest.approx(cts.cts_variance_by_time_integral(m, T),
                                                       rel=1e-9)


def test_varsigma():
    assert cts.varsigma_squared(M.atom(-0.5, domain=H)) == pytest.approx(4.0)
    assert cts.varsigma_squared(M.atom(0.0, domain=H)) == math.inf
    assert cts.varsigma_squared(M.imaginary_segment(1.0)) == 0.0
    # int_a^b 2/x dx on (-b, -a)
    assert cts.varsigma_squared(M.real_segment(-2.0, -1.0)) == pytest.approx(2 * math.log(2), rel=1e-10)


def test_classify_atom_linear():
    rep = cts.cts_classify(M.atom(-1.0, domain=H))
    assert rep.verdict == Verdict.LINEAR
    assert rep.L_obs == pytest.approx(2.0, rel=1e-3)


def test_classify_imaginary_point_degenerate():
    m = M.atom(1j, 0.5, domain=H) + M.atom(-1j, 0.5, domain=H)
    assert cts.cts_classify(m).verdict == Verdict.DEGENERATE


def test_excess_constant_imaginary_segment():
    C, _ = cts.cts_excess_constant(M.imaginary_segment(1.0))
    assert C == pytest.approx(1.0, rel=1e-6)


def test_domain_and_argument_errors():
    with pytest.raises(DomainMismatch):
        cts.cts_variance(M.atom(0.0), 1.0)
    with pytest.raises(OutOfRange):
        cts.cts_variance(M.atom(-1.0, domain=H), -1.0)
    with pytest.raises(OutOfRange):
        cts.cts_classify(M.atom(-1.0, domain=H), T_grid=[1, 2, 3])
    with pytest.raises(OutOfRange):
        cts.cts_classify(M.atom(-1.0, domain=H), T_grid=np.linspace(1, 10, 9))


def test_variance_at_zero():
    assert cts.cts_variance(M.atom(-1.0, domain=H), 0.0) == 0.0
