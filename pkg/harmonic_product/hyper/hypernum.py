"""A finite model of the rho-bounded nonstandard numbers.

Elements of ``rhoC`` (numbers bounded by some ``rho^-n``) that arise in the product computations are Laurent
polynomials in the positive infinitesimal ``rho``. `RhoSeries` stores the known coefficients together with a
truncation order: coefficients of exponents above it are unknown (not zero). ``truncation_order=None`` marks a series
that is known exactly.

Only the sub-ring of finite Laurent series is modelled; hyperreals that are not of this form (and anything needing a
transfer principle or an ultrafilter) are outside the model.
"""
import enum
import math
import numbers
from typing import Any
from typing import Dict
from typing import Mapping
from typing import Optional

from pydantic import root_validator

from harmonic_product.core.custom_model import CustomModel


class IndeterminateError(ValueError):
    """Raised when the known part of a series does not determine the requested property."""


class NoStandardPartError(ValueError):
    """Raised for infinite elements, which are not infinitely close to any standard number."""


@enum.unique
class Classification(enum.Enum):
    ZERO = "zero"
    INFINITESIMAL = "infinitesimal"
    APPRECIABLE = "appreciable"
    INFINITE = "infinite"


def _order(truncation_order: Optional[int]) -> float:
    return math.inf if truncation_order is None else truncation_order


def _truncation(order: float) -> Optional[int]:
    return None if order == math.inf else int(order)


class RhoSeries(CustomModel):
    terms: Dict[int, Any] = {}
    truncation_order: Optional[int] = None

    @root_validator(pre=True)
    def _canonical_terms(cls, values):
        terms = values.get("terms") or {}
        order = _order(values.get("truncation_order"))
        canonical = {}
        for exponent, coefficient in sorted(terms.items()):
            if not isinstance(coefficient, numbers.Number):
                raise TypeError(f"coefficient of rho^{exponent} must be a number, got {coefficient!r}")
            if exponent > order:
                raise ValueError(f"exponent {exponent} lies above truncation order {values.get('truncation_order')}")
            if coefficient != 0:
                canonical[int(exponent)] = coefficient
        values["terms"] = canonical
        return values

    ###################################################################################################################
    # CONSTRUCTORS
    ###################################################################################################################
    @classmethod
    def from_terms(cls, terms: Mapping[int, Any], truncation_order: Optional[int] = None) -> "RhoSeries":
        return cls(terms=dict(terms), truncation_order=truncation_order)

    @classmethod
    def zero(cls) -> "RhoSeries":
        return cls()

    @classmethod
    def one(cls) -> "RhoSeries":
        return cls(terms={0: 1})

    @classmethod
    def rho(cls, power: int = 1) -> "RhoSeries":
        return cls(terms={power: 1})

    ###################################################################################################################
    # PROPERTIES
    ###################################################################################################################
    @property
    def leading_exponent(self) -> Optional[int]:
        return min(self.terms) if self.terms else None

    @property
    def exact(self) -> bool:
        return self.truncation_order is None

    def _valuation(self) -> float:
        return min(self.terms) if self.terms else math.inf

    ###################################################################################################################
    # ARITHMETIC
    ###################################################################################################################
    def add(self, other: "RhoSeries") -> "RhoSeries":
        order = min(_order(self.truncation_order), _order(other.truncation_order))
        terms = dict(self.terms)
        for exponent, coefficient in other.terms.items():
            terms[exponent] = terms.get(exponent, 0) + coefficient
        return RhoSeries(
            terms={e: c for e, c in terms.items() if e <= order},
            truncation_order=_truncation(order),
        )

    def scale(self, factor: Any) -> "RhoSeries":
        return RhoSeries(
            terms={e: factor * c for e, c in self.terms.items()},
            truncation_order=self.truncation_order,
        )

    def neg(self) -> "RhoSeries":
        return self.scale(-1)

    def sub(self, other: "RhoSeries") -> "RhoSeries":
        return self.add(other.neg())

    def mul(self, other: "RhoSeries") -> "RhoSeries":
        t_a, t_b = _order(self.truncation_order), _order(other.truncation_order)
        # unknown tails: A * O(rho^(t_b+1)), B * O(rho^(t_a+1)), O(rho^(t_a+t_b+2))
        order = min(t_a + other._valuation(), t_b + self._valuation(), t_a + t_b + 1)
        terms = {}
        for e_a, c_a in self.terms.items():
            for e_b, c_b in other.terms.items():
                exponent = e_a + e_b
                if exponent <= order:
                    terms[exponent] = terms.get(exponent, 0) + c_a * c_b
        return RhoSeries(terms=terms, truncation_order=_truncation(order))

    __add__ = add
    __sub__ = sub
    __mul__ = mul

    def __neg__(self) -> "RhoSeries":
        return self.neg()

    def isclose(self, other: "RhoSeries", tol: float) -> bool:
        """Coefficient-wise comparison within `tol`, for series imported from numerical fits."""
        if self.truncation_order != other.truncation_order:
            return False
        exponents = set(self.terms) | set(other.terms)
        return all(abs(self.terms.get(e, 0) - other.terms.get(e, 0)) <= tol for e in exponents)

    def __str__(self) -> str:
        if not self.terms:
            body = "0"
        else:
            body = " + ".join(f"{c}*rho^{e}" if e else f"{c}" for e, c in self.terms.items())
        if self.truncation_order is not None:
            body += f" + O(rho^{self.truncation_order + 1})"
        return body


def add(a: RhoSeries, b: RhoSeries) -> RhoSeries:
    return a.add(b)


def mul(a: RhoSeries, b: RhoSeries) -> RhoSeries:
    return a.mul(b)


def classify(a: RhoSeries) -> Classification:
    """Zero, infinitesimal (in theta), appreciable or infinite, read off the leading exponent."""
    if not a.terms:
        if a.exact:
            return Classification.ZERO
        raise IndeterminateError(f"no known terms up to rho^{a.truncation_order}; cannot classify {a}")
    leading = a.leading_exponent
    if leading > 0:
        return Classification.INFINITESIMAL
    if leading == 0:
        return Classification.APPRECIABLE
    return Classification.INFINITE


def psi(a: RhoSeries) -> RhoSeries:
    """Canonical representative of ``a + theta``: every positive power of rho is dropped.

    When everything up to rho^0 is known the representative is exact.
    """
    order = _order(a.truncation_order)
    return RhoSeries(
        terms={e: c for e, c in a.terms.items() if e <= 0},
        truncation_order=None if order >= 0 else a.truncation_order,
    )


def standard_part(a: RhoSeries) -> Any:
    if classify(a) is Classification.INFINITE:
        raise NoStandardPartError(f"{a} is infinite and has no standard part")
    return a.terms.get(0, 0)


def theorem1_series(phi_at_0: float) -> RhoSeries:
    """Value of the product hyperdistribution on a test function with ``phi(0) = phi_at_0``, modulo infinitesimals.

    A test function vanishing at the origin pairs to exactly zero.
    """
    if phi_at_0 == 0:
        return RhoSeries.zero()
    return RhoSeries(terms={-1: phi_at_0 / (2 * math.pi)}, truncation_order=0)
