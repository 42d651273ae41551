import math
from fractions import Fraction

import pytest
import scipy.special
from pydantic import ValidationError

from harmonic_product.core.custom_model import format_fraction
from harmonic_product.exact.exactnum import binomial
from harmonic_product.exact.exactnum import double_factorial
from harmonic_product.exact.exactnum import gamma_half
from harmonic_product.exact.exactnum import gamma_ratio
from harmonic_product.exact.exactnum import PiScaled
from harmonic_product.exact.exactnum import rising_factorial_half


@pytest.mark.parametrize("n, expected", [(-1, 1), (0, 1), (1, 1), (5, 15), (6, 48), (9, 945)])
def test_double_factorial(n, expected):
    assert double_factorial(n) == expected


def test_double_factorial_rejects_below_minus_one():
    with pytest.raises(ValueError, match="n >= -1"):
        double_factorial(-2)


def test_double_factorial_recurrence():
    for n in range(400, 0, -1):
        assert double_factorial(n) == n * double_factorial(n - 2)
    assert double_factorial(30) == math.prod(range(30, 0, -2))


def test_pascal_recurrence():
    for n in range(1, 40):
        for k in range(0, n + 2):
            assert binomial(n, k) == binomial(n - 1, k - 1) + binomial(n - 1, k)


def test_gamma_half_recurrence():
    # Gamma(a + 1) = a Gamma(a) with a = two_a / 2
    for two_a in range(1, 40):
        assert gamma_half(two_a + 2) == gamma_half(two_a) * Fraction(two_a, 2)


def test_binomial():
    assert binomial(5, 2) == 10
    assert binomial(0, 0) == 1
    assert binomial(3, 5) == 0
    assert binomial(3, -1) == 0
    with pytest.raises(ValueError):
        binomial(-1, 0)


def test_rising_factorial_half():
    # (3/2)(5/2)
    assert rising_factorial_half(3, 2) == Fraction(15, 4)
    assert rising_factorial_half(4, 3) == 2 * 3 * 4
    assert rising_factorial_half(7, 0) == 1


@pytest.mark.parametrize("two_a", range(1, 30))
def test_gamma_half_matches_scipy(two_a):
    assert float(gamma_half(two_a)) == pytest.approx(scipy.special.gamma(two_a / 2), rel=1e-13)


def test_gamma_half_exact_values():
    assert gamma_half(1) == PiScaled(q=1, e=1)
    assert gamma_half(2) == PiScaled.rational(1)
    assert gamma_half(5) == PiScaled(q=Fraction(3, 4), e=1)
    assert gamma_half(6) == PiScaled.rational(2)
    with pytest.raises(ValueError, match="positive half-integer"):
        gamma_half(0)


def test_gamma_ratio():
    # Gamma(1/2) / Gamma(5/2)
    assert gamma_ratio(1, 2) == Fraction(4, 3)
    for two_a in range(1, 12):
        for m in range(6):
            assert gamma_half(two_a) / gamma_half(two_a + 2 * m) == PiScaled.rational(gamma_ratio(two_a, m))


class TestPiScaled:
    def test_zero_is_canonical(self):
        assert PiScaled(q=0, e=5) == PiScaled.rational(0)
        assert PiScaled(q=0, e=5).e == 0

    def test_coerces_strings_and_fractions(self):
        assert PiScaled(q="2/4", e=-2) == PiScaled(q=Fraction(1, 2), e=-2)

    def test_rejects_floats(self):
        with pytest.raises(ValidationError):
            PiScaled(q=0.5, e=0)

    def test_arithmetic(self):
        half_over_pi = PiScaled(q=Fraction(1, 2), e=-2)
        assert half_over_pi * PiScaled.pi_power(2) == PiScaled.rational(Fraction(1, 2))
        assert 4 * half_over_pi == PiScaled(q=2, e=-2)
        assert half_over_pi / Fraction(1, 2) == PiScaled.pi_power(-2)
        assert PiScaled.pi_power(3) / PiScaled.pi_power(1) == PiScaled.pi_power(2)

    def test_division_by_zero(self):
        with pytest.raises(ZeroDivisionError):
            PiScaled.pi_power(1) / PiScaled.rational(0)
        with pytest.raises(ZeroDivisionError):
            PiScaled.pi_power(1) / 0

    def test_float(self):
        assert float(PiScaled.pi_power(2)) == pytest.approx(math.pi, rel=1e-15)
        assert float(PiScaled(q=Fraction(1, 2), e=-2)) == pytest.approx(1 / (2 * math.pi), rel=1e-15)

    def test_str_and_dict(self):
        value = PiScaled(q=Fraction(3, 4), e=1)
        assert str(value) == "3/4*pi^(1/2)"
        assert str(PiScaled.rational(Fraction(-1, 8))) == "-1/8"
        assert value.to_dict() == {"q": "3/4", "e": 1, "float": float(value)}

    def test_hashable(self):
        assert len({PiScaled(q="1/2", e=-2), PiScaled(q=Fraction(1, 2), e=-2)}) == 1


def test_format_fraction():
    assert format_fraction(Fraction(0)) == "0/1"
    assert format_fraction(Fraction(-6, 4)) == "-3/2"
    assert format_fraction(7) == "7/1"
