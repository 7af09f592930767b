import cmath
import math
from decimal import Decimal, getcontext

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fasuav.errors import DomainError
from fasuav.specfun import bessel_j0, gamma_fn, gaussian_q, log_gamma

EULER = 0.57721566490153286061


def weierstrass_log_gamma(z, terms=200_000):
    """ln Gamma from the Weierstrass product with an asymptotic tail sum."""
    k = np.arange(1, terms + 1, dtype=float)
    s = np.sum(z / k - np.log1p(z / k))
    # remaining sum_{k>K} z/k - ln(1 + z/k) ~ z^2/(2k^2) - z^3/(3k^3) + ...
    K = terms + 0.5
    tail = z * z / (2 * K) - z ** 3 / (6 * K * K) + z ** 4 / (12 * K ** 3)
    return -EULER * z - cmath.log(z) + s + tail


def j0_decimal(x, terms=80):
    getcontext().prec = 60
    q = -(Decimal(x) ** 2) / 4
    term, total = Decimal(1), Decimal(1)
    for k in range(1, terms):
        term = term * q / (k * k)
        total += term
    return float(total)


def q_continued_fraction(x):
    # erfc(t) = exp(-t^2)/sqrt(pi) * 1/(t + 1/2/(t + 1/(t + 3/2/(t + ...))))
    t = x / math.sqrt(2.0)
    frac = t
    for n in range(200, 0, -1):
        frac = t + (n / 2.0) / frac
    return 0.5 * math.exp(-t * t) / math.sqrt(math.pi) / frac


@pytest.mark.parametrize("z", [0.5, 1.0, 2.5, 3.7, 0.3 + 1.2j, 2.0 - 3.0j, 1e-3 + 0.5j])
def test_log_gamma_matches_weierstrass_product(z):
    got = complex(log_gamma(z))
    ref = weierstrass_log_gamma(complex(z))
    # compare exp to avoid 2*pi*i branch ambiguity, plus the real part
    assert abs(got.real - ref.real) < 1e-9
    assert abs(cmath.exp(1j * (got.imag - ref.imag)) - 1) < 1e-9


@pytest.mark.parametrize("z", [-0.5, -2.3 + 0.1j, -7.5 + 4j, 0.2 - 9j])
def test_log_gamma_reflection_region(z):
    # Gamma(z) Gamma(1 - z) = pi / sin(pi z)
    lhs = complex(log_gamma(z)) + complex(log_gamma(1 - z))
    rhs = cmath.log(math.pi / cmath.sin(math.pi * z))
    assert abs(lhs.real - rhs.real) < 1e-10
    assert abs(cmath.exp(1j * (lhs.imag - rhs.imag)) - 1) < 1e-10


def test_log_gamma_is_continuous_off_the_cut():
    # the only branch cut is the negative real axis; a vertical line in the
    # upper half plane crossing Re = 0.5 must be smooth
    t = np.linspace(0.01, 30, 2001)
    for x in (-2.7, 0.5, 3.0):
        v = log_gamma(x + 1j * t)
        assert np.max(np.abs(np.diff(v.imag))) < 0.2


@pytest.mark.parametrize("z", [-2.7 + 0.01j, -2.7 - 0.01j, -10.3 + 5j, 0.4 + 50j])
def test_log_gamma_branch_matches_mpmath(z):
    mpmath = pytest.importorskip("mpmath")
    ref = complex(mpmath.loggamma(z))
    assert abs(complex(log_gamma(z)) - ref) < 1e-9


@given(st.floats(0.05, 40), st.floats(-20, 20))
def test_log_gamma_recurrence(x, y):
    z = complex(x, y)
    d = complex(log_gamma(z + 1)) - complex(log_gamma(z)) - cmath.log(z)
    assert abs(cmath.exp(d) - 1) < 1e-10


def test_log_gamma_poles_raise():
    for z in (0.0, -1.0, -4.0):
        with pytest.raises(DomainError):
            log_gamma(z)


def test_gamma_fn_known_values():
    assert gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)
    assert gamma_fn(5.0) == pytest.approx(24.0, rel=1e-14)
    assert gamma_fn(-0.5) == pytest.approx(-2 * math.sqrt(math.pi), rel=1e-13)
    assert np.shape(gamma_fn(np.array([1.0, 2.0]))) == (2,)


@pytest.mark.parametrize("x", [0.0, 0.3, 1.0, 2.404825557695773, 5.0, 7.9, 8.1, 12.0, 19.5, 24.9, 25.1, 29.0])
def test_bessel_j0_series_oracle(x):
    assert bessel_j0(x) == pytest.approx(j0_decimal(x), abs=2e-14)


def test_bessel_j0_large_argument():
    # Stokes-free leading Hankel term is accurate to ~1/(8x)^2 relative; use
    # the high-precision series well beyond the switch point instead
    for x in (30.0, 35.5):
        assert bessel_j0(x) == pytest.approx(j0_decimal(x, 140), abs=1e-14)
    assert abs(bessel_j0(1e4)) < 0.01


def test_bessel_j0_first_zero_by_bisection():
    a, b = 2.40, 2.41
    assert bessel_j0(a) > 0 > bessel_j0(b)
    while b - a > 1e-14:
        mid = 0.5 * (a + b)
        if bessel_j0(mid) > 0:
            a = mid
        else:
            b = mid
    assert a == pytest.approx(2.404825557695773, abs=1e-13)


def test_bessel_j0_satisfies_bessel_ode():
    h = 1e-4
    for x in np.linspace(0.5, 20.0, 40):
        d1 = (bessel_j0(x + h) - bessel_j0(x - h)) / (2 * h)
        d2 = (bessel_j0(x + h) - 2 * bessel_j0(x) + bessel_j0(x - h)) / h ** 2
        assert abs(d2 + d1 / x + bessel_j0(x)) <= 1e-6


def test_bessel_j0_even_and_vectorised():
    x = np.linspace(0, 40, 101)
    assert np.array_equal(bessel_j0(x), bessel_j0(-x))
    assert isinstance(bessel_j0(1.0), float)


def test_gaussian_q_values():
    assert gaussian_q(0.0) == 0.5
    for x in (3.0, 5.0, 10.0, 20.0):
        assert gaussian_q(x) == pytest.approx(q_continued_fraction(x), rel=1e-12)


@given(st.floats(-30, 30))
def test_gaussian_q_symmetry(x):
    assert gaussian_q(x) + gaussian_q(-x) == pytest.approx(1.0, abs=1e-15)


def test_gaussian_q_rejects_nan():
    with pytest.raises(DomainError):
        gaussian_q(float("nan"))
