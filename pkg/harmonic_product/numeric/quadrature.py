"""Evaluation of the normalized product constant ``A_hat(n) = rho * A(1, n)`` and of every constant in its formula.

The radial/polar-angle form used throughout, for n >= 3::

    A_hat(n) = 2 pi / (c_1 c_n) * prod_{j=1}^{n-3} W_j * I_n
    I_n      = int_0^inf int_0^pi t^(n-1) sin^(n-2)(xi) / ((1 + t^2)^((n+1)/2) (1 + t^2 cos^2 xi)) dxi dt

where ``W_j = int_0^pi sin^j`` and ``2 pi prod W_j`` is the area of the sphere S^(n-2) orthogonal to the polar axis.
The radial weight is ``t^(n-1)``: this is what spherical coordinates in R^n give, and with it I_3 = pi / 4.
"""
import enum
import functools
import math
from fractions import Fraction
from typing import Optional
from typing import Tuple
from typing import Union

import numpy as np
from loguru import logger
from pydantic import validator

from harmonic_product.core.custom_model import CustomModel
from harmonic_product.exact import identities
from harmonic_product.exact.exactnum import double_factorial
from harmonic_product.exact.exactnum import gamma_half
from harmonic_product.exact.exactnum import PiScaled
from harmonic_product.numeric.integrate import adaptive_quad
from harmonic_product.numeric.integrate import DEFAULT_MAX_EVALUATIONS
from harmonic_product.numeric.integrate import nested_quad
from harmonic_product.numeric.integrate import QuadResult

HALF_PI = 0.5 * math.pi


@enum.unique
class AHatMethod(enum.Enum):
    CLOSED_FORM = "closed"
    FORMULA = "formula"
    DIRECT = "direct"
    RECURSION = "recursion"


class AHatEvaluation(CustomModel):
    n: int
    method: AHatMethod
    value: Union[PiScaled, float]
    quad: Optional[QuadResult] = None

    @validator("n")
    def _positive_dimension(cls, n):
        if n < 1:
            raise ValueError(f"dimension n must be >= 1, got {n}")
        return n

    @validator("value")
    def _finite(cls, value):
        if not math.isfinite(float(value)):
            raise ValueError(f"A_hat evaluation produced a non-finite value {value}")
        return value

    @property
    def exact(self) -> bool:
        return isinstance(self.value, PiScaled)

    @property
    def converged(self) -> bool:
        return self.quad is None or self.quad.converged

    def __float__(self) -> float:
        return float(self.value)


###################################################################################################################
# EXACT CONSTANTS
###################################################################################################################


def wallis(j: int) -> PiScaled:
    """Exact ``int_0^pi sin^j(theta) dtheta``."""
    if j < 0:
        raise ValueError(f"wallis() requires j >= 0, got {j}")
    ratio = Fraction(double_factorial(j - 1), double_factorial(j))
    if j % 2 == 0:
        return PiScaled(q=ratio, e=2)
    return PiScaled(q=2 * ratio, e=0)


def c_constant(n: int) -> PiScaled:
    """Poisson-kernel normalisation ``c_n = pi^((n+1)/2) / Gamma((n+1)/2)``."""
    if n < 1:
        raise ValueError(f"c_constant() requires n >= 1, got {n}")
    return PiScaled.pi_power(n + 1) / gamma_half(n + 1)


def sphere_area(m: int) -> PiScaled:
    """Surface area of the unit sphere S^m in R^(m+1); ``sphere_area(0) = 2`` counts the two points of S^0."""
    if m < 0:
        raise ValueError(f"sphere_area() requires m >= 0, got {m}")
    return 2 * PiScaled.pi_power(m + 1) / gamma_half(m + 1)


def c_recursion_check(n: int) -> bool:
    """Exact check of ``c_n = 2 pi / (n - 1) * c_(n-2)``."""
    if n < 3:
        raise ValueError(f"c_recursion_check() requires n >= 3, got {n}")
    return c_constant(n) == PiScaled(q=Fraction(2, n - 1), e=2) * c_constant(n - 2)


def _formula_prefactor(n: int) -> PiScaled:
    prefactor = PiScaled(q=2, e=2) / (c_constant(1) * c_constant(n))
    for j in range(1, n - 2):
        prefactor = prefactor * wallis(j)
    return prefactor


###################################################################################################################
# NUMERICAL INTEGRALS
###################################################################################################################


def _txi_integrand(n: int, xi: float, u: np.ndarray) -> np.ndarray:
    # t = tan(u): t^(n-1) dt / (1+t^2)^((n+1)/2) = sin^(n-1)(u) du
    # and 1 + t^2 cos^2 = (cos^2 u + sin^2 u cos^2 xi) / cos^2 u
    sin_u = np.sin(u)
    cos_u_sq = np.cos(u) ** 2
    return sin_u ** (n - 1) * cos_u_sq * math.sin(xi) ** (n - 2) / (cos_u_sq + sin_u**2 * math.cos(xi) ** 2)


def inner_txi_integral(n: int, tol: float, max_evaluations: int = DEFAULT_MAX_EVALUATIONS) -> QuadResult:
    """``I_n`` by nested adaptive quadrature.

    Outer xi over [0, pi] seeded at pi/2, inner u = arctan(t) over [0, pi/2].
    """
    if n < 3:
        raise ValueError(f"inner_txi_integral() requires n >= 3, got {n}")
    return nested_quad(
        functools.partial(_txi_integrand, n),
        outer=(0.0, math.pi),
        inner=(0.0, HALF_PI),
        tol=tol,
        outer_breakpoints=(HALF_PI,),
        max_evaluations=max_evaluations,
    )


def _scaled(result: QuadResult, factor: float, tol: float) -> QuadResult:
    return result.copy(
        update={
            "value": factor * result.value,
            "abs_error_estimate": abs(factor) * result.abs_error_estimate,
            "tolerance": tol,
        }
    )


def a_hat_formula(n: int, tol: float, max_evaluations: int = DEFAULT_MAX_EVALUATIONS) -> AHatEvaluation:
    """``A_hat(n)`` from the exact prefactor times the numerical ``I_n`` (n >= 3)."""
    if n < 3:
        raise ValueError(f"the A(1, n) integral formula needs n >= 3, got {n}; use a_hat_direct for n in (1, 2)")
    prefactor = float(_formula_prefactor(n))
    integral = inner_txi_integral(n, tol / prefactor, max_evaluations=max_evaluations)
    quad = _scaled(integral, prefactor, tol)
    logger.debug(f"A_hat({n}) formula: {quad.value!r} +/- {quad.abs_error_estimate:.2e} ({quad.evaluations} evals)")

    return AHatEvaluation(n=n, method=AHatMethod.FORMULA, value=quad.value, quad=quad)


def _direct_1d(u: np.ndarray) -> np.ndarray:
    # u1 = tan(w): (1 + u1^2)^-1 (1 + u1^2)^-1 du1 = cos^2(w) dw
    t = np.tan(u)
    return (1.0 + t**2) ** -2 / np.cos(u) ** 2


def _direct_2d(w1: float, w2: np.ndarray) -> np.ndarray:
    u1 = math.tan(w1)
    u2 = np.tan(w2)
    jacobian = (1.0 + u1**2) * (1.0 + u2**2)
    return jacobian / ((u1**2 + u2**2 + 1.0) ** 1.5 * (u1**2 + 1.0))


def a_hat_direct(n: int, tol: float, max_evaluations: int = DEFAULT_MAX_EVALUATIONS) -> AHatEvaluation:
    """``A_hat(n) = (1 / (c_1 c_n)) int_{R^n} du / ((|u|^2 + 1)^((n+1)/2) (u_1^2 + 1))`` for n in (1, 2)."""
    if n not in (1, 2):
        raise ValueError(f"a_hat_direct() handles n in (1, 2) only, got {n}")
    normalisation = float(c_constant(1) * c_constant(n))
    # even integrand: integrate one half-line (n=1) or one quadrant (n=2)
    symmetry = 2.0**n
    factor = symmetry / normalisation
    if n == 1:
        integral = adaptive_quad(_direct_1d, 0.0, HALF_PI, tol / factor, max_evaluations=max_evaluations)
    else:
        integral = nested_quad(
            _direct_2d, (0.0, HALF_PI), (0.0, HALF_PI), tol / factor, max_evaluations=max_evaluations
        )
    quad = _scaled(integral, factor, tol)

    return AHatEvaluation(n=n, method=AHatMethod.DIRECT, value=quad.value, quad=quad)


def _plane_integrand(n: int, s: float, w1: float, w2: np.ndarray) -> np.ndarray:
    scale = math.sqrt(s)
    u = scale * math.tan(w1)
    v = scale * np.tan(w2)
    jacobian = s * (1.0 + math.tan(w1) ** 2) * (1.0 + np.tan(w2) ** 2)
    return jacobian * (s + u**2 + v**2) ** (-(n + 1) / 2)


def reduction_lemma_value(
    n: int, s: float, tol: float, max_evaluations: int = DEFAULT_MAX_EVALUATIONS
) -> Tuple[QuadResult, float]:
    """Numerical ``int_{R^2} du dv / (s + u^2 + v^2)^((n+1)/2)``.

    Returned alongside its polar-coordinate value ``2 pi / ((n-1) s^((n-1)/2))``.
    """
    if n < 3:
        raise ValueError(f"the reduction lemma needs n >= 3, got {n}")
    if not s > 0:
        raise ValueError(f"the reduction lemma needs s > 0, got {s}")
    quadrant = nested_quad(
        functools.partial(_plane_integrand, n, s),
        (0.0, HALF_PI),
        (0.0, HALF_PI),
        tol / 4.0,
        max_evaluations=max_evaluations,
    )
    lhs = _scaled(quadrant, 4.0, tol)
    rhs = 2.0 * math.pi / ((n - 1) * s ** ((n - 1) / 2))

    return lhs, rhs


def reduction_lemma_check(n: int, s: float, tol: float, max_evaluations: int = DEFAULT_MAX_EVALUATIONS) -> bool:
    lhs, rhs = reduction_lemma_value(n, s, tol, max_evaluations=max_evaluations)
    matches = lhs.converged and abs(lhs.value - rhs) <= tol
    logger.debug(f"reduction lemma n={n} s={s}: {lhs.value!r} vs {rhs!r} -> {matches}")
    return matches


def a_hat_recursion(n: int, tol: float, max_evaluations: int = DEFAULT_MAX_EVALUATIONS) -> AHatEvaluation:
    """``A_hat(n)`` by repeatedly integrating out two coordinates until the direct 1D or 2D integral remains.

    Each step contributes ``L_m * c_(m-2) / c_m`` with ``L_m`` the numerical plane integral at s = 1 (after scaling
    out ``s``, the plane integral over the last two coordinates is ``s^-((m-1)/2) L_m``).
    """
    if n < 3:
        raise ValueError(f"a_hat_recursion() requires n >= 3, got {n}")
    base_n = 2 - n % 2
    steps = list(range(n, base_n, -2))
    share = tol / (len(steps) + 1)

    base = a_hat_direct(base_n, share, max_evaluations=max_evaluations)
    factor = 1.0
    relative_error = 0.0
    evaluations = base.quad.evaluations
    converged = base.quad.converged
    for m in steps:
        # int_{R^2} (1 + |w|^2)^-((m+1)/2) >= pi 2^-((m+1)/2) (unit disc), so this tolerance is at most `share` relative
        plane, _ = reduction_lemma_value(m, 1.0, share * math.pi * 2.0 ** (-(m + 1) / 2), max_evaluations)
        factor *= plane.value * float(c_constant(m - 2) / c_constant(m))
        relative_error += plane.abs_error_estimate / plane.value
        evaluations += plane.evaluations
        converged &= plane.converged
        logger.debug(f"A_hat({n}) descent: A({m}) -> A({m - 2}), plane integral {plane.value!r}")

    value = factor * float(base.value)
    error = abs(factor) * base.quad.abs_error_estimate + abs(value) * relative_error
    quad = QuadResult(
        value=value,
        abs_error_estimate=error,
        evaluations=evaluations,
        converged=converged and error <= tol,
        tolerance=tol,
    )

    return AHatEvaluation(n=n, method=AHatMethod.RECURSION, value=value, quad=quad)


def a_hat_closed_form(n: int) -> AHatEvaluation:
    """Exact ``A_hat(n)`` from the closed-form coefficient sums (n >= 2) or the Wallis value for n = 1."""
    if n < 1:
        raise ValueError(f"a_hat_closed_form() requires n >= 1, got {n}")
    if n == 1:
        # int_R (1 + u^2)^-2 du = int_0^pi sin^2
        value = wallis(2) / (c_constant(1) * c_constant(1))
    elif n % 2:
        value = identities.coeff_odd((n - 1) // 2)
    else:
        value = identities.coeff_even((n - 2) // 2)

    return AHatEvaluation(n=n, method=AHatMethod.CLOSED_FORM, value=value)


def a_hat(n: int, method: AHatMethod, tol: float, max_evaluations: int = DEFAULT_MAX_EVALUATIONS) -> AHatEvaluation:
    if method is AHatMethod.CLOSED_FORM:
        return a_hat_closed_form(n)
    if method is AHatMethod.FORMULA:
        return a_hat_formula(n, tol, max_evaluations=max_evaluations)
    if method is AHatMethod.DIRECT:
        return a_hat_direct(n, tol, max_evaluations=max_evaluations)
    return a_hat_recursion(n, tol, max_evaluations=max_evaluations)
