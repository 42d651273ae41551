import math

import numpy as np
import pytest
from pydantic import ValidationError

from harmonic_product.hyper import hypernum
from harmonic_product.hyper.hypernum import Classification
from harmonic_product.hyper.hypernum import IndeterminateError
from harmonic_product.hyper.hypernum import NoStandardPartError
from harmonic_product.hyper.hypernum import RhoSeries

ZERO = RhoSeries.zero()
ONE = RhoSeries.one()
RHO = RhoSeries.rho()


def series(*pairs, truncation_order=None) -> RhoSeries:
    return RhoSeries.from_terms(dict(pairs), truncation_order=truncation_order)


def random_series(rng: np.random.Generator, min_exponent: int = -3) -> RhoSeries:
    exponents = rng.integers(min_exponent, 4, size=rng.integers(0, 5))
    return RhoSeries.from_terms({int(e): int(rng.integers(-5, 6)) for e in exponents})


class TestArithmetic:
    def test_add(self):
        assert hypernum.add(series((-1, 1), (0, 2)), series((0, -2))) == RhoSeries.rho(-1)
        assert series((0, 1), (1, 1)) + series((0, 1), (1, -1)) == series((0, 2))
        assert hypernum.add(series((2, 7)), ZERO) == series((2, 7))

    def test_mul(self):
        assert hypernum.mul(series((-1, 1), (0, 2)), RHO) == series((0, 1), (1, 2))
        assert series((0, 1), (1, 1)) * series((0, 1), (1, -1)) == series((0, 1), (2, -1))
        assert hypernum.mul(series((-2, 3)), ONE) == series((-2, 3))

    def test_sub_neg_scale(self):
        a = series((-1, 2), (1, 3))
        assert a - a == ZERO
        assert -a == a.scale(-1)
        assert a.scale(0.5) == series((-1, 1.0), (1, 1.5))

    def test_truncation_propagates(self):
        fitted = series((-1, 1.0), (0, 2.0), truncation_order=0)
        product = fitted * RHO
        assert product.truncation_order == 1
        assert product.terms == {0: 1.0, 1: 2.0}
        total = fitted + series((0, 1), (3, 4))
        assert total.truncation_order == 0
        assert total.terms == {-1: 1.0, 0: 3.0}

    def test_truncated_product_keeps_only_known_terms(self):
        a = series((0, 1), truncation_order=1)
        b = series((-1, 1), (0, 1), truncation_order=0)
        product = a * b
        # unknown rho^2 terms of a times rho^-1 leave rho^1 unknown
        assert product.truncation_order == 0
        assert product.terms == {-1: 1, 0: 1}

    def test_canonical_form(self):
        assert series((0, 0), (1, 0)) == ZERO
        assert list(series((3, 1), (-2, 1), (0, 1)).terms) == [-2, 0, 3]

    def test_validation(self):
        with pytest.raises(ValidationError, match="truncation order"):
            series((2, 1), truncation_order=1)
        with pytest.raises(ValidationError):
            series((0, "one"))

    def test_complex_coefficients(self):
        a = series((-1, 1j), (0, 2))
        assert (a * a).terms == {-2: -1, -1: 4j, 0: 4}

    def test_str(self):
        assert str(series((-1, 1), (0, 5))) == "1*rho^-1 + 5"
        assert str(series((0, 2), truncation_order=0)) == "2 + O(rho^1)"
        assert str(ZERO) == "0"

    def test_isclose(self):
        assert series((-1, 0.1), truncation_order=0).isclose(series((-1, 0.1 + 1e-9), truncation_order=0), tol=1e-8)
        assert series((-1, 0.1)).isclose(series((-1, 0.1)), tol=0.0)
        assert not series((-1, 0.1), truncation_order=0).isclose(series((-1, 0.1)), tol=1e-8)


class TestClassification:
    @pytest.mark.parametrize(
        "value, expected",
        [
            (series((2, 3)), Classification.INFINITESIMAL),
            (series((-1, 1), (0, 5)), Classification.INFINITE),
            (series((0, 7), (1, 1)), Classification.APPRECIABLE),
            (ZERO, Classification.ZERO),
        ],
    )
    def test_classify(self, value, expected):
        assert hypernum.classify(value) is expected

    def test_indeterminate(self):
        with pytest.raises(IndeterminateError):
            hypernum.classify(series(truncation_order=2))

    def test_psi(self):
        assert hypernum.psi(series((0, 1), (1, 2))) == ONE
        assert hypernum.psi(series((-1, 1), (0, 5), (1, 1))) == series((-1, 1), (0, 5))
        assert hypernum.psi(series((3, 1))) == ZERO
        assert hypernum.psi(series((-1, 1.0), truncation_order=0)).exact
        assert hypernum.psi(series((-2, 1.0), truncation_order=-1)).truncation_order == -1

    def test_standard_part(self):
        assert hypernum.standard_part(series((0, 7), (1, 1))) == 7
        assert hypernum.standard_part(series((2, 1))) == 0
        with pytest.raises(NoStandardPartError):
            hypernum.standard_part(RhoSeries.rho(-1))


class TestTheoremOneSeries:
    def test_unit(self):
        assert hypernum.theorem1_series(1.0).terms == {-1: 1 / (2 * math.pi)}

    def test_zero(self):
        vanishing = hypernum.theorem1_series(0.0)
        assert vanishing == ZERO
        assert vanishing.exact
        assert hypernum.classify(vanishing) is Classification.ZERO
        assert hypernum.standard_part(vanishing) == 0

    def test_scaling(self):
        assert hypernum.theorem1_series(2 * math.pi).terms == {-1: 1.0}
        assert hypernum.theorem1_series(2 * math.pi).truncation_order == 0


def _check_ring_axioms(a: RhoSeries, b: RhoSeries, c: RhoSeries):
    assert a + b == b + a
    assert a * b == b * a
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a + ZERO == a
    assert a * ONE == a
    assert a - a == ZERO


def _check_psi(a: RhoSeries, b: RhoSeries):
    psi = hypernum.psi
    assert psi(psi(a)) == psi(a)
    assert psi(a + b) == psi(psi(a) + psi(b))
    if hypernum.classify(a) is not Classification.ZERO:
        assert (hypernum.classify(a) is Classification.INFINITESIMAL) == (psi(a) == ZERO)
    if a.terms and b.terms:
        assert (a * b).leading_exponent == a.leading_exponent + b.leading_exponent


def _check_finite_psi_is_multiplicative(a: RhoSeries, b: RhoSeries):
    # theta is an ideal of the finite elements only
    psi = hypernum.psi
    assert psi(a * b) == psi(psi(a) * psi(b))


@pytest.mark.parametrize("seed", range(5))
def test_ring_and_quotient_properties(seed):
    rng = np.random.default_rng(seed)
    for _ in range(100):
        a, b, c = (random_series(rng) for _ in range(3))
        _check_ring_axioms(a, b, c)
        _check_psi(a, b)
        _check_finite_psi_is_multiplicative(random_series(rng, min_exponent=0), random_series(rng, min_exponent=0))


@pytest.mark.slow
def test_ring_and_quotient_properties_at_scale():
    rng = np.random.default_rng(2024)
    for _ in range(10_000):
        a, b, c = (random_series(rng) for _ in range(3))
        _check_ring_axioms(a, b, c)
        _check_psi(a, b)
        _check_finite_psi_is_multiplicative(random_series(rng, min_exponent=0), random_series(rng, min_exponent=0))
