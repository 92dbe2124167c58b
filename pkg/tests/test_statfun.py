import math

import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special, stats

from errors import DomainError
from statfun import normal_sf, reg_inc_beta, reg_lower_gamma, reg_upper_gamma


def binomial_tail(s: int, n: int, p: float) -> float:
    return sum(math.comb(n, j) * p ** j * (1 - p) ** (n - j) for j in range(s, n + 1))


def poisson_partial(a: int, s: float) -> float:
    return math.exp(-s) * sum(s ** k / math.factorial(k) for k in range(a))


# ---------- неполная бета ----------
def test_beta_boundaries():
    assert reg_inc_beta(0.0, 2.0, 3.0) == 0.0
    assert reg_inc_beta(1.0, 2.0, 3.0) == 1.0


def test_beta_spot_values():
    assert reg_inc_beta(0.25, 2, 2) == pytest.approx(3 * 0.25 ** 2 - 2 * 0.25 ** 3, rel=1e-10)
    assert reg_inc_beta(0.25, 2, 2) == pytest.approx(0.15625, rel=1e-10)
    assert reg_inc_beta(0.25, 3, 3) == pytest.approx(0.103515625, rel=1e-10)


@pytest.mark.parametrize("n", range(1, 31))
@pytest.mark.parametrize("gamma", [0.1, 0.25, 0.5, 0.8])
def test_beta_matches_binomial_enumeration(n, gamma):
    for s in range(1, n + 1):
        want = binomial_tail(s, n, gamma)
        assert reg_inc_beta(gamma, s, n - s + 1) == pytest.approx(want, rel=1e-10, abs=1e-15)


@given(
    x=st.floats(0.0, 1.0),
    a=st.floats(0.05, 1e6),
    b=st.floats(0.05, 1e6),
)
def test_beta_agrees_with_scipy(x, a, b):
    assert reg_inc_beta(x, a, b) == pytest.approx(float(special.betainc(a, b, x)), rel=1e-10, abs=1e-15)


@given(a=st.floats(10.0, 1e6), b=st.floats(0.5, 1e6), t=st.floats(-6.0, 6.0))
def test_beta_near_the_mean_with_large_parameters(a, b, t):
    c = a + b
    x = a / c + t * math.sqrt(a * b / c ** 3)
    if not 0.0 < x < 1.0:
        return
    assert reg_inc_beta(x, a, b) == pytest.approx(float(special.betainc(a, b, x)), rel=1e-10, abs=1e-15)


@pytest.mark.parametrize("a", [10.0, 1e3, 1e5, 1e6])
def test_beta_symmetric_median(a):
    assert reg_inc_beta(0.5, a, a) == pytest.approx(0.5, rel=1e-10)


@pytest.mark.parametrize("x", [0.9, 0.99999, 0.999999, 0.9999995])
@pytest.mark.parametrize("a", [50.0, 1e4, 1e6])
def test_beta_with_b_two_has_closed_form(x, a):
    want = x ** a * (1.0 + a * (1.0 - x))
    assert reg_inc_beta(x, a, 2.0) == pytest.approx(want, rel=1e-10, abs=1e-300)


def test_beta_large_parameters_spot_values():
    assert reg_inc_beta(0.999999, 1e6, 2) == pytest.approx(0.999999 ** 1e6 * (1 + 1e6 * (1 - 0.999999)), rel=1e-10)
    assert reg_inc_beta(0.4999, 1e6, 1e6) == pytest.approx(float(special.betainc(1e6, 1e6, 0.4999)), rel=1e-10)


@given(x1=st.floats(0.0, 1.0), x2=st.floats(0.0, 1.0), a=st.floats(0.1, 50.0), b=st.floats(0.1, 50.0))
def test_beta_nondecreasing_in_x(x1, x2, a, b):
    lo, hi = sorted((x1, x2))
    assert reg_inc_beta(lo, a, b) <= reg_inc_beta(hi, a, b) + 1e-14


@pytest.mark.parametrize("x,a,b", [(-0.1, 1, 1), (1.1, 1, 1), (0.5, 0, 1), (0.5, 1, -2), (float("nan"), 1, 1)])
def test_beta_domain(x, a, b):
    with pytest.raises(DomainError):
        reg_inc_beta(x, a, b)


# ---------- неполные гаммы ----------
def test_gamma_spot_values():
    assert reg_upper_gamma(1, 0) == 1.0
    assert reg_lower_gamma(1, 0) == 0.0
    assert reg_upper_gamma(1, 2.5) == pytest.approx(math.exp(-2.5), rel=1e-10)
    assert reg_lower_gamma(1, 2.5) == pytest.approx(1 - math.exp(-2.5), rel=1e-10)
    assert reg_upper_gamma(2, 1) == pytest.approx(2 / math.e, rel=1e-10)
    s = math.log(8)
    assert reg_upper_gamma(3, s) == pytest.approx(math.exp(-s) * (1 + s + s * s / 2), rel=1e-10)


@pytest.mark.parametrize("a", range(1, 31))
@pytest.mark.parametrize("s", [0.1, 0.5, 1.0, 3.0, 7.5, 15.0, 30.0, 45.0])
def test_gamma_matches_poisson_enumeration(a, s):
    assert reg_upper_gamma(a, s) == pytest.approx(poisson_partial(a, s), rel=1e-10, abs=1e-15)


@given(a=st.floats(0.05, 300.0), s=st.floats(0.0, 600.0))
def test_gamma_complementarity(a, s):
    assert reg_lower_gamma(a, s) + reg_upper_gamma(a, s) == pytest.approx(1.0, abs=1e-12)


@given(a=st.floats(0.05, 1e6), s=st.floats(0.0, 2e6))
def test_gamma_agrees_with_scipy(a, s):
    assert reg_upper_gamma(a, s) == pytest.approx(float(special.gammaincc(a, s)), rel=1e-10, abs=1e-15)


@given(a=st.floats(10.0, 1e6), t=st.floats(-6.0, 6.0))
def test_gamma_near_the_mean_with_large_shape(a, t):
    s = a + t * math.sqrt(a)
    assert reg_upper_gamma(a, s) == pytest.approx(float(special.gammaincc(a, s)), rel=1e-10, abs=1e-15)
    assert reg_lower_gamma(a, s) == pytest.approx(float(special.gammainc(a, s)), rel=1e-10, abs=1e-15)


def test_gamma_large_shape_spot_value():
    assert reg_upper_gamma(1e5, 1.01e5) == pytest.approx(float(special.gammaincc(1e5, 1.01e5)), rel=1e-10)


@given(a=st.floats(0.1, 100.0), s1=st.floats(0.0, 200.0), s2=st.floats(0.0, 200.0))
def test_upper_gamma_nonincreasing(a, s1, s2):
    lo, hi = sorted((s1, s2))
    assert reg_upper_gamma(a, hi) <= reg_upper_gamma(a, lo) + 1e-14


@pytest.mark.parametrize("a,s", [(0, 1), (-1, 1), (1, -0.5), (float("inf"), 1)])
def test_gamma_domain(a, s):
    with pytest.raises(DomainError):
        reg_upper_gamma(a, s)


# ---------- нормальный хвост ----------
def test_normal_sf_spot_values():
    assert normal_sf(0.0) == 0.5
    assert normal_sf(1.959963985) == pytest.approx(0.025, abs=1e-9)
    assert normal_sf(-40.0) == 1.0
    assert 0.0 <= normal_sf(40.0) < 1e-300


@given(z=st.floats(-37.0, 37.0))
def test_normal_sf_agrees_with_scipy(z):
    assert normal_sf(z) == pytest.approx(float(stats.norm.sf(z)), abs=1e-12)


def test_normal_sf_nan():
    with pytest.raises(DomainError):
        normal_sf(float("nan"))
