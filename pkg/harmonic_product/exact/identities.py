"""Exact evaluation of both sides of the two combinatorial identities and of the closed-form coefficients.

Theorem 2 (k >= 1)::

    sum_{j=1}^{k-1} sum_{p=0}^{j-1} C(k-1, j) C(j-1, p) (-1)^j (2p+1)!! (2j-2p-1)!! / ((2j+2)!! (2p+1)) = 1/(4k) - 1/4

Theorem 3 (k >= 1)::

    sum_{j,r,p,s,h} C(2k, k+1+j) C(j-r, p) C(r, s) C(p+s, h) (-1)^(j+p+r+1) Gamma(k-j) Gamma(a)
        / (2^(2k-2+p+s-j) Gamma(b))  = 1/(2k+1) - 1

with ``a = 1 - h + (p+s+j+1)/2`` and ``b = a + (k - j)``.
"""
import enum
import functools
import math
import time
from collections import defaultdict
from fractions import Fraction
from typing import List
from typing import Tuple
from typing import Union

from loguru import logger
from pydantic import root_validator
from pydantic import validator

from harmonic_product.core.custom_model import CustomModel
from harmonic_product.core.utils.core_utils import parallel_map
from harmonic_product.core.utils.core_utils import timer
from harmonic_product.exact.exactnum import binomial
from harmonic_product.exact.exactnum import double_factorial
from harmonic_product.exact.exactnum import gamma_ratio
from harmonic_product.exact.exactnum import PiScaled

# rho * A(1, n) predicted for every n
ONE_OVER_TWO_PI = PiScaled(q=Fraction(1, 2), e=-2)


@enum.unique
class Theorem(enum.Enum):
    THM2 = "thm2"
    THM3 = "thm3"
    COEFF_ODD = "odd"
    COEFF_EVEN = "even"

    @property
    def k_floor(self) -> int:
        return 0 if self is Theorem.COEFF_EVEN else 1


class IdentityReport(CustomModel):
    theorem: Theorem
    k: int
    lhs: Union[Fraction, PiScaled]
    rhs: Union[Fraction, PiScaled]
    verified: bool
    term_count: int
    elapsed: float = 0.0

    @validator("term_count")
    def _non_negative(cls, term_count):
        if term_count < 0:
            raise ValueError(f"term_count must be non-negative, got {term_count}")
        return term_count

    @root_validator(skip_on_failure=True)
    def _verified_means_exact_equality(cls, values):
        if values["verified"] != (values["lhs"] == values["rhs"]):
            raise ValueError(
                f"{values['theorem'].value} k={values['k']}: `verified` flag disagrees with lhs == rhs"
            )
        return values


def _check_k(k: int, floor: int = 1):
    if k < floor:
        raise ValueError(f"k must be >= {floor}, got {k}")


###################################################################################################################
# THEOREM 2
###################################################################################################################


@functools.lru_cache(maxsize=None)
def _theorem2_inner(j: int) -> Tuple[int, int]:
    """k-independent inner p-sum of Theorem 2, an integer because ``(2p+1)!! / (2p+1) = (2p-1)!!``.

    Returns:
        (value, term_count): the p-sum and the number of p terms in it
    """
    value = 0
    term_count = 0
    c_p = 1  # C(j-1, p)
    for p in range(j):
        value += c_p * double_factorial(2 * p - 1) * double_factorial(2 * j - 2 * p - 1)
        term_count += 1
        c_p = c_p * (j - 1 - p) // (p + 1)
    return value, term_count


def _theorem2(k: int) -> Tuple[Fraction, int]:
    _check_k(k)
    # Every (2j+2)!! with j <= k-1 divides (2k)!!, so the sum is accumulated over that common denominator.
    # j runs downwards carrying C(k-1, j) and (2k)!! / (2j+2)!!
    numerator = 0
    term_count = 0
    c_j = 1
    scale = 1
    for j in range(k - 1, 0, -1):
        inner, inner_count = _theorem2_inner(j)
        numerator += (-1) ** j * c_j * inner * scale
        term_count += inner_count
        c_j = c_j * j // (k - j)
        scale *= 2 * j + 2

    return Fraction(numerator, double_factorial(2 * k)), term_count


def theorem2_lhs(k: int) -> Fraction:
    return _theorem2(k)[0]


def theorem2_rhs(k: int) -> Fraction:
    _check_k(k)
    return Fraction(1, 4 * k) - Fraction(1, 4)


###################################################################################################################
# THEOREM 3
###################################################################################################################


def theorem3_slice(k: int, j: int) -> Tuple[Fraction, int]:
    """Partial sum of Theorem 3 over all (r, p, s, h) for one fixed j.

    Terms sharing ``u = p + s`` and ``h`` have the same Gamma quotient and power of two, so their integer numerators
    are bucketed first and each bucket is divided out once.

    Returns:
        (value, term_count): exact partial sum and the number of (j, r, p, s, h) tuples summed
    """
    _check_k(k)
    if not 0 <= j < k:
        raise ValueError(f"Theorem 3 slice index j must satisfy 0 <= j < k={k}, got {j}")

    buckets = defaultdict(int)
    term_count = 0
    for r in range(j + 1):
        for p in range(j - r + 1):
            c_p = math.comb(j - r, p)
            sign = -1 if (j + p + r + 1) % 2 else 1
            for s in range(r + 1):
                coefficient = sign * c_p * math.comb(r, s)
                u = p + s
                for h in range(u + 1):
                    buckets[(u, h)] += coefficient * math.comb(u, h)
                term_count += u + 1

    # Gamma(a) / Gamma(a + k - j) with 2a = u + j + 3 - 2h
    m = k - j
    total = Fraction(0)
    for (u, h), numerator in sorted(buckets.items()):
        if numerator == 0:
            continue
        two_a = u + j + 3 - 2 * h
        if two_a < 1:
            raise RuntimeError(f"Theorem 3 reached a Gamma pole at k={k}, j={j}, u={u}, h={h}")
        total += numerator * gamma_ratio(two_a, m) / 2 ** (2 * k - 2 + u - j)

    prefactor = binomial(2 * k, k + 1 + j) * math.factorial(k - j - 1)

    return prefactor * total, term_count


def _theorem3(k: int) -> Tuple[Fraction, int]:
    _check_k(k)
    value = Fraction(0)
    term_count = 0
    for j in range(k):
        partial, count = theorem3_slice(k, j)
        value += partial
        term_count += count
    return value, term_count


def theorem3_lhs(k: int) -> Fraction:
    return _theorem3(k)[0]


def theorem3_rhs(k: int) -> Fraction:
    _check_k(k)
    return Fraction(1, 2 * k + 1) - 1


###################################################################################################################
# CLOSED-FORM COEFFICIENTS (rho * A(1, n))
###################################################################################################################


def _coeff_odd(k: int, theorem2_sum: Fraction) -> PiScaled:
    return PiScaled(q=2 * k * (Fraction(1, 4) + theorem2_sum), e=-2)


def _coeff_even(k: int, theorem3_sum: Fraction) -> PiScaled:
    return PiScaled(q=Fraction(2 * k + 1, 2) * (1 + theorem3_sum), e=-2)


def coeff_odd(k: int) -> PiScaled:
    """``rho * A(1, 2k+1) = (2k / pi) (1/4 + Theorem 2 sum)``"""
    return _coeff_odd(k, theorem2_lhs(k))


def coeff_even(k: int) -> PiScaled:
    """``rho * A(1, 2k+2) = ((2k+1) / (2 pi)) (1 + Theorem 3 sum)``; the sum is empty for k = 0."""
    _check_k(k, floor=0)
    return _coeff_even(k, theorem3_lhs(k) if k >= 1 else Fraction(0))


###################################################################################################################
# REPORTS
###################################################################################################################


def evaluate(theorem: Theorem, k: int) -> IdentityReport:
    """Evaluate one identity at one k and compare both sides exactly."""
    _check_k(k, floor=theorem.k_floor)
    start = time.perf_counter()
    if theorem is Theorem.THM2:
        lhs, term_count = _theorem2(k)
        rhs = theorem2_rhs(k)
    elif theorem is Theorem.THM3:
        lhs, term_count = _theorem3(k)
        rhs = theorem3_rhs(k)
    elif theorem is Theorem.COEFF_ODD:
        theorem2_sum, term_count = _theorem2(k)
        lhs, rhs = _coeff_odd(k, theorem2_sum), ONE_OVER_TWO_PI
    else:
        theorem3_sum, term_count = _theorem3(k) if k >= 1 else (Fraction(0), 0)
        lhs, rhs = _coeff_even(k, theorem3_sum), ONE_OVER_TWO_PI
    elapsed = time.perf_counter() - start

    report = IdentityReport(
        theorem=theorem, k=k, lhs=lhs, rhs=rhs, verified=lhs == rhs, term_count=term_count, elapsed=elapsed
    )
    logger.debug(f"{theorem.value} k={k}: verified={report.verified} ({term_count} terms, {elapsed:.3f} s)")

    return report


class _Evaluator:
    """Picklable single-argument wrapper around `evaluate` for worker pools."""

    def __init__(self, theorem: Theorem):
        self.theorem = theorem

    def __call__(self, k: int) -> IdentityReport:
        return evaluate(self.theorem, k)


@timer
def verify_range(theorem: Theorem, k_min: int, k_max: int, n_jobs: int = 1) -> List[IdentityReport]:
    """Evaluate `theorem` for every k in ``[k_min, k_max]``; reports are returned in k order."""
    _check_k(k_min, floor=theorem.k_floor)
    if k_max < k_min:
        raise ValueError(f"Empty k range {k_min}..{k_max}")

    reports = parallel_map(_Evaluator(theorem), range(k_min, k_max + 1), n_jobs=n_jobs, desc=theorem.value)
    failures = [report.k for report in reports if not report.verified]
    if failures:
        logger.error(f"{theorem.value}: identity fails for k in {failures}")
    else:
        logger.info(f"{theorem.value}: verified exactly for k = {k_min}..{k_max}")

    return reports
