import math

import mpmath
import pytest
from hypothesis import given, strategies as st
from scipy import integrate as sci_integrate

from exitbounds.errors import BracketError, ConvergenceError, DomainError
from exitbounds.numerics import (
    bessel_j0,
    find_root,
    first_bessel_zero,
    integrate,
    log_gamma,
    log_upper_incomplete_gamma,
    minimize_1d,
    scaled_upper_incomplete_gamma,
    upper_incomplete_gamma,
)

mpmath.mp.dps = 40


# ---- log_gamma

@pytest.mark.parametrize("x, expected", [(1.0, 0.0), (0.5, 0.5723649429247001),
                                         (10.0, math.log(362880.0))])
def test_log_gamma_examples(x, expected):
    assert log_gamma(x) == pytest.approx(expected, rel=1e-13, abs=1e-15)


@given(st.floats(0.5, 1e6))
def test_log_gamma_matches_mpmath(x):
    ref = float(mpmath.loggamma(x))
    assert abs(log_gamma(x) - ref) <= 1e-13 * max(1.0, abs(ref))


@pytest.mark.parametrize("x", [0.0, -1.0, math.inf, math.nan])
def test_log_gamma_rejects(x):
    with pytest.raises(DomainError):
        log_gamma(x)


# ---- incomplete gamma

def test_upper_gamma_examples():
    assert upper_incomplete_gamma(1.0, 2.0) == pytest.approx(math.exp(-2.0), rel=1e-12)
    assert upper_incomplete_gamma(3.0, 0.0) == pytest.approx(2.0, rel=1e-14)
    quad, _ = sci_integrate.quad(lambda u: u ** 1.5 * math.exp(-u), 1.3, math.inf,
                                 epsabs=1e-14, epsrel=1e-13)
    assert upper_incomplete_gamma(2.5, 1.3) == pytest.approx(quad, abs=1e-9)


@given(st.floats(0.05, 60.0), st.floats(0.0, 200.0))
def test_upper_gamma_matches_mpmath(s, x):
    ref = mpmath.gammainc(s, x)
    if ref == 0:
        return
    got = log_upper_incomplete_gamma(s, x)
    assert abs(got - float(mpmath.log(ref))) <= 1e-10 * max(1.0, abs(got))


@given(st.floats(0.1, 10.0), st.floats(0.5, 1e4))
def test_scaled_upper_gamma_is_tail_integral(p, k):
    # e^k k^-p Gamma(p, k) = int_1^inf u^(p-1) e^((1-u) k) du
    ref = float(mpmath.quad(lambda u: u ** (p - 1) * mpmath.e ** ((1 - u) * k), [1, 1 + 1 / k, mpmath.inf]))
    assert scaled_upper_incomplete_gamma(p, k) == pytest.approx(ref, rel=1e-10)


def test_incomplete_gamma_rejects():
    for s, x in [(0.0, 1.0), (-1.0, 1.0), (1.0, -0.5)]:
        with pytest.raises(DomainError):
            upper_incomplete_gamma(s, x)


@given(st.floats(0.1, 20.0), st.floats(0.0, 30.0), st.floats(0.01, 5.0))
def test_upper_gamma_decreasing_in_x(s, x, dx):
    assert log_upper_incomplete_gamma(s, x + dx) <= log_upper_incomplete_gamma(s, x)


# ---- Bessel

def test_bessel_examples():
    assert bessel_j0(0.0) == 1.0
    assert bessel_j0(1.0) == pytest.approx(0.7651976865579666, abs=1e-12)
    assert abs(bessel_j0(first_bessel_zero())) < 1e-10
    assert first_bessel_zero() == pytest.approx(2.404825557695773, abs=1e-14)


@given(st.floats(0.0, 50.0))
def test_bessel_matches_mpmath(x):
    assert abs(bessel_j0(x) - float(mpmath.besselj(0, x))) <= 1e-12


@given(st.floats(0.0, 50.0))
def test_bessel_even(x):
    assert bessel_j0(-x) == bessel_j0(x)


# ---- root finding / minimisation

def test_find_root_simple():
    assert find_root(lambda x: x * x - 2.0, 0.0, 2.0) == pytest.approx(math.sqrt(2.0), abs=1e-12)
    assert find_root(math.cos, 1.0, 2.0, tol=1e-15) == pytest.approx(math.pi / 2, abs=1e-14)


def test_find_root_endpoint_root():
    assert find_root(lambda x: x - 1.0, 1.0, 3.0) == 1.0


def test_find_root_bracket_error():
    with pytest.raises(BracketError):
        find_root(lambda x: x * x + 1.0, -1.0, 1.0)


def test_find_root_budget():
    with pytest.raises(ConvergenceError) as info:
        find_root(lambda x: x ** 3 - 0.3, 0.0, 1.0, tol=1e-15, max_evals=3)
    assert info.value.diagnostics


@given(st.floats(-50, 50), st.floats(0.1, 10))
def test_find_root_linear(r, slope):
    got = find_root(lambda x: slope * (x - r), r - 7.3, r + 3.1)
    assert abs(got - r) <= 1e-12 * max(1.0, abs(r)) + 1e-12


def test_minimize_quadratic():
    x, fx = minimize_1d(lambda x: (x - 0.3) ** 2 + 1.0, -2.0, 5.0, tol=1e-12)
    assert x == pytest.approx(0.3, abs=1e-6)
    assert fx == pytest.approx(1.0, abs=1e-12)


def test_minimize_rejects_bad_interval():
    with pytest.raises(DomainError):
        minimize_1d(lambda x: x, 1.0, 0.0)


# ---- quadrature

def test_integrate_finite_and_infinite():
    r = integrate(math.sin, 0.0, math.pi)
    assert r.value == pytest.approx(2.0, abs=1e-12) and r.abs_error >= 0 and r.converged
    r = integrate(lambda x: math.exp(-x), 0.0, math.inf)
    assert r.value == pytest.approx(1.0, abs=1e-10)
    r = integrate(lambda x: x ** 1.5 * math.exp(-x), 1.3, math.inf, tol=1e-12)
    assert r.value == pytest.approx(upper_incomplete_gamma(2.5, 1.3), abs=1e-10)


def test_integrate_budget_flag():
    r = integrate(lambda x: 1.0 / math.sqrt(x) if x > 0 else 0.0, 0.0, 1.0, tol=1e-15, max_evals=45)
    assert not r.converged
    assert r.evaluations <= 45 + 15


@given(st.floats(-3, 3), st.floats(0.1, 4))
def test_integrate_polynomial_exact(a, w):
    b = a + w
    r = integrate(lambda x: 3 * x * x - x + 2, a, b)
    exact = (b ** 3 - a ** 3) - (b * b - a * a) / 2 + 2 * (b - a)
    assert r.value == pytest.approx(exact, abs=1e-10)


@pytest.mark.parametrize("s", [0.5 * k for k in range(1, 21)])
def test_upper_gamma_at_zero_is_gamma(s):
    assert upper_incomplete_gamma(s, 0.0) == pytest.approx(math.exp(log_gamma(s)), rel=1e-10)


@given(st.floats(0.5, 8.0), st.floats(0.0, 20.0))
def test_upper_gamma_recurrence(s, x):
    lhs = upper_incomplete_gamma(s + 1.0, x)
    rhs = s * upper_incomplete_gamma(s, x) + x ** s * math.exp(-x)
    assert lhs == pytest.approx(rhs, rel=1e-9)


@pytest.mark.parametrize("s, x", [(0.5, 0.3), (2.0, 3.0), (4.5, 10.0)])
def test_integrate_reproduces_upper_gamma(s, x):
    r = integrate(lambda t: t ** (s - 1.0) * math.exp(-t), x, math.inf, tol=1e-13)
    assert r.value == pytest.approx(upper_incomplete_gamma(s, x), rel=1e-8)


def test_tail_integral_example():
    # p = 2, kappa = 3: e^3 3^-2 Gamma(2, 3) = 4/9
    assert scaled_upper_incomplete_gamma(2.0, 3.0) == pytest.approx(4.0 / 9.0, rel=1e-12)
    r = integrate(lambda u: u * math.exp((1.0 - u) * 3.0), 1.0, math.inf, tol=1e-13)
    assert r.value == pytest.approx(4.0 / 9.0, rel=1e-8)


def test_solvers_deterministic():
    f = lambda x: math.cos(x) - x
    assert find_root(f, 0.0, 1.0) == find_root(f, 0.0, 1.0)
    g = lambda x: (x - 0.3) ** 2 + math.sin(5 * x) * 0.01
    assert minimize_1d(g, 0.0, 1.0) == minimize_1d(g, 0.0, 1.0)
