"""Exact arithmetic primitives.

Rationals are `fractions.Fraction` (always in lowest terms with a positive denominator). Values that carry a power of
the square root of pi, such as Gamma at half-integers or the Poisson-kernel constants, are kept symbolic as `PiScaled`.
"""
import functools
import math
import threading
from fractions import Fraction
from typing import Union

from pydantic import validator

from harmonic_product.core.custom_model import convert_to_fraction
from harmonic_product.core.custom_model import CustomModel
from harmonic_product.core.custom_model import format_fraction

Rational = Union[int, Fraction]


class PiScaled(CustomModel):
    """Exact value ``q * pi**(e/2)``.

    Because sqrt(pi) is transcendental the representation is unique once zero is canonicalised to ``e = 0``, so
    structural equality of ``(q, e)`` is value equality.
    """

    q: Fraction
    e: int = 0

    @validator("q", pre=True)
    def _coerce_q(cls, q):
        return convert_to_fraction(q)

    @validator("e")
    def _zero_has_no_pi(cls, e, values):
        if values.get("q") == 0:
            return 0
        return e

    @classmethod
    def rational(cls, q: Rational) -> "PiScaled":
        return cls(q=q, e=0)

    @classmethod
    def pi_power(cls, e: int) -> "PiScaled":
        """``pi**(e/2)``"""
        return cls(q=1, e=e)

    def __mul__(self, other: Union["PiScaled", Rational]) -> "PiScaled":
        if isinstance(other, PiScaled):
            return PiScaled(q=self.q * other.q, e=self.e + other.e)
        if isinstance(other, (int, Fraction)):
            return PiScaled(q=self.q * other, e=self.e)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other: Union["PiScaled", Rational]) -> "PiScaled":
        if isinstance(other, PiScaled):
            if other.q == 0:
                raise ZeroDivisionError("PiScaled division by zero")
            return PiScaled(q=self.q / other.q, e=self.e - other.e)
        if isinstance(other, (int, Fraction)):
            return PiScaled(q=self.q / Fraction(other), e=self.e)
        return NotImplemented

    def __float__(self) -> float:
        return float(self.q) * math.pi ** (self.e / 2)

    def __str__(self) -> str:
        if self.e == 0:
            return str(self.q)
        exponent = Fraction(self.e, 2)
        return f"{self.q}*pi^({exponent})"

    def to_dict(self) -> dict:
        return {"q": format_fraction(self.q), "e": self.e, "float": float(self)}


_DOUBLE_FACTORIALS = [1, 1]
_DOUBLE_FACTORIALS_LOCK = threading.Lock()


def double_factorial(n: int) -> int:
    """``n!!`` with the empty-product convention ``(-1)!! = 0!! = 1``.

    Values are memoized in a table indexed by ``n`` that grows by ``n!! = n * (n-2)!!``, so a sweep over increasing
    arguments costs one multiplication per new entry.
    """
    if n < -1:
        raise ValueError(f"double_factorial() requires n >= -1, got {n}")
    if n <= 0:
        return 1
    if n >= len(_DOUBLE_FACTORIALS):
        with _DOUBLE_FACTORIALS_LOCK:
            table = _DOUBLE_FACTORIALS
            while len(table) <= n:
                m = len(table)
                table.append(m * table[m - 2])
    return _DOUBLE_FACTORIALS[n]


def binomial(n: int, k: int) -> int:
    """Binomial coefficient, zero outside ``0 <= k <= n``."""
    if n < 0:
        raise ValueError(f"binomial() requires n >= 0, got {n}")
    if k < 0 or k > n:
        return 0
    return math.comb(n, k)


def _check_two_a(two_a: int):
    if two_a < 1:
        raise ValueError(f"Gamma argument must be a positive half-integer, got two_a={two_a}")


@functools.lru_cache(maxsize=None)
def rising_factorial_half(two_a: int, m: int) -> Fraction:
    """Exact rising factorial ``a (a+1) ... (a+m-1)`` for ``a = two_a / 2``."""
    _check_two_a(two_a)
    if m < 0:
        raise ValueError(f"rising factorial length must be non-negative, got m={m}")
    # a(a+1)...(a+m-1) = [two_a (two_a+2) ... (two_a+2m-2)] / 2^m
    numerator = math.prod(range(two_a, two_a + 2 * m, 2))
    return Fraction(numerator, 2**m)


def gamma_half(two_a: int) -> PiScaled:
    """Exact ``Gamma(two_a / 2)`` for positive integer `two_a`."""
    _check_two_a(two_a)
    if two_a % 2 == 0:
        return PiScaled.rational(math.factorial(two_a // 2 - 1))
    # Gamma(m + 1/2) = (2m-1)!! / 2^m * sqrt(pi)
    m = (two_a - 1) // 2
    return PiScaled(q=Fraction(double_factorial(2 * m - 1), 2**m), e=1)


def gamma_ratio(two_a: int, m: int) -> Fraction:
    """Exact ``Gamma(a) / Gamma(a + m)`` for ``a = two_a / 2`` and integer ``m >= 0``."""
    if m < 0:
        raise ValueError(f"gamma_ratio() requires m >= 0, got {m}")
    return 1 / rising_factorial_half(two_a, m)
