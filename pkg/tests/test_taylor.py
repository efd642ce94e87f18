import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st
from scipy import integrate

from varith.core import UncertainValue as U
from varith.harness import acceptance_boundary
from varith.moments import normal_density
from varith.taylor import (
    DegreeExceeded,
    ExpansionRejected,
    NegativeBaseNonInteger,
    NonPositiveValue,
    Status,
    ZeroBaseNonNatural,
    cos_u,
    exp_u,
    log_u,
    polynomial_u,
    pow_u,
    sin_u,
)

KAPPA = 5.0


def quad_stats(f, x, sigma):
    """Mean and variance of f(x + sigma z), z standard normal truncated to ±5."""
    mass, _ = integrate.quad(normal_density, -KAPPA, KAPPA, epsabs=0, epsrel=1e-13)
    w = lambda g: integrate.quad(lambda z: g(z) * normal_density(z), -KAPPA, KAPPA, epsabs=1e-16, epsrel=1e-12, limit=400)[0] / mass
    m = w(lambda z: f(x + sigma * z))
    v = w(lambda z: (f(x + sigma * z) - m) ** 2)
    return m, v


# an odd integrand with zero mean cannot meet a relative tolerance
@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
@pytest.mark.parametrize(
    "fn, f, x, sigma",
    [
        (exp_u, math.exp, 0.0, 0.1),
        (exp_u, math.exp, 1.5, 1.0),
        (exp_u, math.exp, -2.0, 3.0),
        (log_u, math.log, 1.0, 0.1),
        (log_u, math.log, 3.0, 0.3),
        (sin_u, math.sin, 0.0, 0.1),
        (sin_u, math.sin, 1.0, 0.5),
        (cos_u, math.cos, 0.3, 0.2),
    ],
)
def test_expansion_matches_quadrature(fn, f, x, sigma):
    out = fn(U(x, sigma * sigma))
    assert out.accepted
    m, v = quad_stats(f, x, sigma)
    assert out.mean == pytest.approx(m, rel=1e-10, abs=1e-14)
    assert out.variance == pytest.approx(v, rel=1e-9)


@pytest.mark.parametrize("c", [-2.0, -1.0, -0.5, 0.5, 1.5, 2.5])
def test_pow_matches_quadrature(c):
    out = pow_u(U(2.0, 0.2**2), c)
    m, v = quad_stats(lambda t: t**c, 2.0, 0.2)
    assert out.mean == pytest.approx(m, rel=1e-10)
    assert out.variance == pytest.approx(v, rel=1e-9)


def test_frozen_spot_values():
    # frozen from the quadrature oracle
    assert exp_u(U(0.0, 0.01)).variance == pytest.approx(0.010151, rel=1e-4)
    assert log_u(U(1.0, 0.01)).variance == pytest.approx(0.010261, rel=1e-4)
    assert sin_u(U(0.0, 0.01)).variance == pytest.approx(0.0099005, rel=1e-4)
    assert sin_u(U(math.pi / 2, 1e-4)).deviation == pytest.approx(7.070e-5, rel=1e-3)
    sq = pow_u(U(1.0, 0.01), 2)
    assert sq.mean == pytest.approx(1.01, rel=1e-6)
    assert sq.variance == pytest.approx(0.0402, rel=1e-4)


def test_precise_input_passes_through():
    out = exp_u(U(1.0))
    assert out.accepted and out.variance == 0.0 and out.mean == math.e


def test_log_boundary_near_one_fifth():
    b, st_ = acceptance_boundary(lambda p: log_u(U(1.0, p * p)), 0.01, 0.5)
    assert b == pytest.approx(0.20087, abs=5e-4)
    assert st_ is Status.NOT_MONOTONIC
    assert log_u(U(1.0, 0.25**2)).status is Status.NOT_MONOTONIC


def test_reciprocal_boundary():
    b, st_ = acceptance_boundary(lambda p: pow_u(U(1.0, p * p), -1), 0.01, 0.5)
    assert 0.195 <= b <= 0.205


def test_sin_boundary_at_zero():
    b, st_ = acceptance_boundary(lambda s: sin_u(U(0.0, s * s)), 0.5, 4.0)
    assert b / math.pi == pytest.approx(0.318, abs=2e-3)
    assert st_ is Status.NOT_POSITIVE


def test_natural_power_has_no_bound():
    out = pow_u(U(1.0, 4.0), 3)
    assert out.accepted
    # E[(1 + 2z)^3] with truncated moments
    from varith.moments import gaussian_table

    t = gaussian_table()
    assert out.mean == pytest.approx(1 + 3 * 4 * t.zeta(2), rel=1e-14)


def test_errors():
    with pytest.raises(NonPositiveValue):
        log_u(U(0.0, 1.0))
    with pytest.raises(ZeroBaseNonNatural):
        pow_u(U(0.0, 1.0), 0.5)
    with pytest.raises(NegativeBaseNonInteger):
        pow_u(U(-1.0, 0.01), 0.5)
    with pytest.raises(DegreeExceeded):
        polynomial_u([1.0] * 300, U(0.5, 0.01))
    with pytest.raises(ExpansionRejected):
        log_u(U(1.0, 0.09)).unwrap()
    assert exp_u(U(800.0, 0.01)).status is Status.NOT_FINITE
    assert pow_u(U(0.0, 1.0), 2).accepted


def test_polynomial_against_symbolic_expansion():
    coeffs = [1.0, -2.0, 0.5, 3.0, -1.0]
    x0, s = 0.7, 0.3
    z = sp.symbols("z")
    from varith.moments import gaussian_table

    t = gaussian_table()
    poly = sum(sp.Rational(c).limit_denominator() * (sp.Rational(7, 10) + sp.Rational(3, 10) * z) ** k for k, c in enumerate(coeffs))
    expand = sp.Poly(sp.expand(poly), z)

    def moment(p):
        return sum(float(c) * (t.zeta(k[0]) if k[0] % 2 == 0 else 0.0) for k, c in p.terms())

    mean = moment(expand)
    second = moment(sp.Poly(sp.expand(poly**2), z))
    out = polynomial_u(coeffs, U(x0, s * s))
    assert out.mean == pytest.approx(mean, rel=1e-13)
    assert out.variance == pytest.approx(second - mean * mean, rel=1e-11)


def test_geometric_series_degree_224_is_admissible():
    assert polynomial_u([1.0] * 225, U(0.5, 1e-20)).accepted


@settings(max_examples=50, deadline=None)
@given(st.floats(-5, 5), st.floats(1e-6, 3.0), st.floats(-5, 5))
def test_exp_shift_scales(x, s, a):
    base = exp_u(U(x, s * s))
    moved = exp_u(U(x + a, s * s))
    assert moved.mean == pytest.approx(base.mean * math.exp(a), rel=1e-9)
    assert moved.deviation == pytest.approx(base.deviation * math.exp(a), rel=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 100.0), st.floats(1e-6, 0.19))
def test_log_depends_only_on_precision(x, p):
    a = log_u(U(x, (p * x) ** 2))
    b = log_u(U(1.0, p * p))
    assert a.accepted and b.accepted
    assert a.mean - math.log(x) == pytest.approx(b.mean, rel=1e-9, abs=1e-15)
    assert a.variance == pytest.approx(b.variance, rel=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.floats(-4, 4), st.floats(1e-4, 0.8))
def test_sin_variance_positive_and_cos_shift(x, s):
    a = sin_u(U(x, s * s))
    assert a.accepted and a.variance > 0
    c = cos_u(U(x, s * s))
    b = sin_u(U(x + math.pi / 2, s * s))
    assert c == b


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.floats(-3, 3), st.floats(1e-3, 2.0))
def test_natural_power_equals_monomial(n, x, s):
    a = pow_u(U(x, s * s), n)
    b = polynomial_u([0.0] * n + [1.0], U(x, s * s))
    assert a.mean == pytest.approx(b.mean, rel=1e-12, abs=1e-12)
    assert a.variance == pytest.approx(b.variance, rel=1e-10, abs=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.floats(-0.19, 0.19))
def test_small_noise_reduces_to_first_order(x):
    s = 1e-6
    out = exp_u(U(x, s * s))
    assert out.deviation == pytest.approx(math.exp(x) * s, rel=1e-5)
