"""Finite-rho simulation of the harmonic product of delta(x_1, ..., x_n) and delta(x_1).

Both factors are represented by Poisson kernels at height rho; the pairing with a test function is an ordinary
integral over R^n. Test functions are axially symmetric about the x_1 axis (n >= 3), which reduces every pairing to a
2D integral over (x_1, r = |x_perp|) with the exact sphere area of S^(n-2) as weight.
"""
import enum
import functools
import math
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np
import scipy.linalg
from loguru import logger
from pydantic import root_validator
from pydantic import validator

from harmonic_product.core.custom_model import CustomModel
from harmonic_product.core.utils.core_utils import parallel_map
from harmonic_product.hyper.hypernum import RhoSeries
from harmonic_product.numeric.integrate import adaptive_quad
from harmonic_product.numeric.integrate import DEFAULT_MAX_EVALUATIONS
from harmonic_product.numeric.integrate import nested_quad
from harmonic_product.numeric.integrate import QuadResult
from harmonic_product.numeric.quadrature import c_constant
from harmonic_product.numeric.quadrature import sphere_area

HALF_PI = 0.5 * math.pi
# Largest acceptable 2-norm condition number of the Laurent design matrix
MAX_FIT_CONDITION = 1e10


class IllConditionedFitError(ValueError):
    pass


@enum.unique
class TestFunctionKind(enum.Enum):
    GAUSSIAN_RADIAL = "gaussian"
    GAUSSIAN_SHIFTED = "shifted"
    BUMP_COMPACT = "bump"
    CONSTANT = "const"


class TestFunction(CustomModel):
    """Test function phi with an exactly known phi(0).

    - gaussian:  exp(-|x|^2 / width^2)
    - shifted:   exp(-|x - center|^2 / width^2)
    - bump:      exp(-1 / (1 - |x / radius|^2)) on |x| < radius, zero outside
    - const:     level everywhere

    Gaussians and constants are not compactly supported; they are admitted because every pairing below converges
    absolutely. The bump is the genuine member of D(R^n).
    """

    __test__ = False

    kind: TestFunctionKind
    width: Optional[float] = None
    center: Tuple[float, ...] = ()
    radius: Optional[float] = None
    level: Optional[float] = None
    value_at_origin: Optional[float] = None

    @root_validator(skip_on_failure=True)
    def _parameters_and_origin_value(cls, values):
        kind = values["kind"]
        if kind in (TestFunctionKind.GAUSSIAN_RADIAL, TestFunctionKind.GAUSSIAN_SHIFTED):
            if values["width"] is None or not values["width"] > 0:
                raise ValueError(f"{kind.value} test function needs a positive width")
            center_sq = sum(c**2 for c in values["center"])
            if kind is TestFunctionKind.GAUSSIAN_RADIAL and center_sq:
                raise ValueError("a radial Gaussian is centred at the origin; use a shifted Gaussian instead")
            origin = math.exp(-center_sq / values["width"] ** 2)
        elif kind is TestFunctionKind.BUMP_COMPACT:
            if values["radius"] is None or not values["radius"] > 0:
                raise ValueError("bump test function needs a positive radius")
            origin = math.exp(-1.0)
        else:
            if values["level"] is None:
                raise ValueError("constant test function needs a level")
            origin = values["level"]
        values["value_at_origin"] = origin
        return values

    ###################################################################################################################
    # CONSTRUCTORS
    ###################################################################################################################
    @classmethod
    def gaussian_radial(cls, width: float) -> "TestFunction":
        return cls(kind=TestFunctionKind.GAUSSIAN_RADIAL, width=width)

    @classmethod
    def gaussian_shifted(cls, center: Sequence[float], width: float) -> "TestFunction":
        return cls(kind=TestFunctionKind.GAUSSIAN_SHIFTED, center=tuple(center), width=width)

    @classmethod
    def bump(cls, radius: float) -> "TestFunction":
        return cls(kind=TestFunctionKind.BUMP_COMPACT, radius=radius)

    @classmethod
    def constant(cls, level: float) -> "TestFunction":
        return cls(kind=TestFunctionKind.CONSTANT, level=level)

    @classmethod
    def parse(cls, spec: str) -> "TestFunction":
        """Parse ``gaussian:W``, ``shifted:C1[/C2...]:W``, ``bump:R`` or ``const:L``."""
        kind, _, rest = spec.strip().partition(":")
        args = rest.split(":") if rest else []
        try:
            if kind == "gaussian" and len(args) == 1:
                return cls.gaussian_radial(float(args[0]))
            if kind == "shifted" and len(args) == 2:
                return cls.gaussian_shifted([float(c) for c in args[0].split("/")], float(args[1]))
            if kind == "bump" and len(args) == 1:
                return cls.bump(float(args[0]))
            if kind == "const" and len(args) == 1:
                return cls.constant(float(args[0]))
        except ValueError as e:
            raise ValueError(f"Invalid test function {spec!r}: {e}") from e
        raise ValueError(f"Unknown test function {spec!r}; expected gaussian:W, shifted:C:W, bump:R or const:L")

    ###################################################################################################################
    # PROPERTIES
    ###################################################################################################################
    @property
    def is_compact(self) -> bool:
        return self.kind is TestFunctionKind.BUMP_COMPACT

    @property
    def is_axial(self) -> bool:
        """Depends on (x_1, |x_perp|) only."""
        return all(c == 0 for c in self.center[1:])

    @property
    def sup_norm(self) -> float:
        if self.kind is TestFunctionKind.CONSTANT:
            return abs(self.level)
        if self.kind is TestFunctionKind.BUMP_COMPACT:
            return math.exp(-1.0)
        return 1.0

    @property
    def offsets(self) -> Tuple[float, float]:
        """Location of the bulk of phi along x_1 and along the second coordinate."""
        padded = tuple(self.center) + (0.0, 0.0)
        return padded[0], padded[1]

    def __str__(self) -> str:
        if self.kind is TestFunctionKind.GAUSSIAN_RADIAL:
            return f"gaussian:{self.width!r}"
        if self.kind is TestFunctionKind.GAUSSIAN_SHIFTED:
            return f"shifted:{'/'.join(repr(c) for c in self.center)}:{self.width!r}"
        if self.kind is TestFunctionKind.BUMP_COMPACT:
            return f"bump:{self.radius!r}"
        return f"const:{self.level!r}"

    def evaluate(self, x1: np.ndarray, y: np.ndarray) -> np.ndarray:
        """phi at x_1 and second coordinate y (y = |x_perp| for axial use, y = x_2 for n = 2)."""
        x1, y = np.broadcast_arrays(np.asarray(x1, dtype=float), np.asarray(y, dtype=float))
        if self.kind is TestFunctionKind.CONSTANT:
            return np.full(x1.shape, float(self.level))
        c1, c2 = self.offsets
        distance_sq = (x1 - c1) ** 2 + (y - c2) ** 2
        if self.kind is TestFunctionKind.BUMP_COMPACT:
            s_sq = distance_sq / self.radius**2
            inside = s_sq < 1.0
            return np.where(inside, np.exp(-1.0 / np.where(inside, 1.0 - s_sq, 1.0)), 0.0)
        return np.exp(-distance_sq / self.width**2)


class ProductActionResult(CustomModel):
    n: int
    rho: float
    phi: TestFunction
    action: float
    normalized: float
    quad: QuadResult

    @validator("normalized")
    def _bookkeeping(cls, normalized, values):
        if "action" in values and normalized != 2 * math.pi * values["rho"] * values["action"]:
            raise ValueError("normalized must equal 2 pi rho action")
        return normalized

    @property
    def noncompact(self) -> bool:
        """True when phi is one of the non-compact conveniences rather than a member of D(R^n)."""
        return not self.phi.is_compact


class LaurentFit(CustomModel):
    series: RhoSeries
    rho_ladder: Tuple[float, ...]
    actions: Tuple[float, ...]
    residual_norm: float
    condition_number: float

    @property
    def c_minus1(self) -> float:
        return self.series.terms.get(-1, 0.0)

    @property
    def c_0(self) -> float:
        return self.series.terms.get(0, 0.0)


###################################################################################################################
# POISSON KERNEL
###################################################################################################################


@functools.lru_cache(maxsize=None)
def _c_float(n: int) -> float:
    return float(c_constant(n))


def _kernel_sq(n: int, distance_sq, y: float):
    return y / (_c_float(n) * (distance_sq + y * y) ** ((n + 1) / 2))


def poisson_kernel(n: int, x, y: float) -> float:
    """``c_n^-1 y (|x|^2 + y^2)^(-(n+1)/2)``, the harmonic representation of delta on R^n at height y."""
    if n < 1:
        raise ValueError(f"dimension n must be >= 1, got {n}")
    if not y > 0:
        raise ValueError(f"Poisson kernel height must be positive, got y={y}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (n,):
        raise ValueError(f"expected a point in R^{n}, got shape {x.shape}")
    return float(_kernel_sq(n, float(np.dot(x, x)), y))


def kernel_mass(n: int, y: float, tol: float, max_evaluations: int = DEFAULT_MAX_EVALUATIONS) -> QuadResult:
    """Total mass of the Poisson kernel, integrated radially with r = y tan(w)."""
    if not y > 0:
        raise ValueError(f"Poisson kernel height must be positive, got y={y}")
    area = float(sphere_area(n - 1))

    def radial(w: np.ndarray) -> np.ndarray:
        r = y * np.tan(w)
        return area * r ** (n - 1) * _kernel_sq(n, r**2, y) * y / np.cos(w) ** 2

    return adaptive_quad(radial, 0.0, HALF_PI, tol, max_evaluations=max_evaluations)


###################################################################################################################
# PRODUCT ACTION
###################################################################################################################


def _cutoff(n: int, rho: float, phi: TestFunction, tol: float) -> float:
    """Radius outside of which the normalized pairing changes by less than tol / 10.

    With ``delta_hat(x_1, rho) <= 1 / (pi rho)`` and the Poisson tail mass outside radius R bounded by
    ``(|S^(n-1)| / c_n) rho / R``, the normalized tail is at most ``2 |phi|_inf (|S^(n-1)| / c_n) rho / R``.
    """
    if phi.is_compact:
        return phi.radius + math.hypot(*phi.offsets)
    ratio = float(sphere_area(n - 1)) / _c_float(n)
    return max(20.0 * phi.sup_norm * ratio * rho / tol, rho)


def _action_integrand(n: int, rho: float, phi: TestFunction, w1: float, w2: np.ndarray) -> np.ndarray:
    x1 = rho * math.tan(w1)
    y = rho * np.tan(w2)
    jacobian = rho * rho * (1.0 + math.tan(w1) ** 2) * (1.0 + np.tan(w2) ** 2)
    product = _kernel_sq(n, x1 * x1 + y * y, rho) * _kernel_sq(1, x1 * x1, rho)
    if n >= 3:
        product = product * float(sphere_area(n - 2)) * y ** (n - 2)
    return jacobian * product * phi.evaluate(x1, y)


def _action_integrand_1d(rho: float, phi: TestFunction, w: np.ndarray) -> np.ndarray:
    x = rho * np.tan(w)
    return rho / np.cos(w) ** 2 * _kernel_sq(1, x * x, rho) ** 2 * phi.evaluate(x, 0.0)


def _breakpoints(rho: float, limit: float, *offsets: float) -> Tuple[float, ...]:
    points = {0.0}
    points.update(math.atan(offset / rho) for offset in offsets if offset)
    return tuple(p for p in sorted(points) if -limit < p < limit)


def product_action(
    n: int, rho: float, phi: TestFunction, tol: float, max_evaluations: int = DEFAULT_MAX_EVALUATIONS
) -> ProductActionResult:
    """``<delta_hat(x; rho) delta_hat(x_1; rho), phi>`` on R^n.

    `tol` applies to the normalized value ``2 pi rho action``.
    """
    if n < 1:
        raise ValueError(f"dimension n must be >= 1, got {n}")
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    if len(phi.center) > n:
        raise ValueError(f"test function centre {phi.center} does not live in R^{n}")
    if n >= 3 and not phi.is_axial:
        raise ValueError(f"{phi} is not axially symmetric about the x_1 axis; n = {n} needs the (x_1, r) reduction")

    radius = _cutoff(n, rho, phi, tol)
    limit = math.atan(radius / rho)
    action_tol = tol / (2 * math.pi * rho)
    c1, c2 = phi.offsets
    if n == 1:
        quad = adaptive_quad(
            functools.partial(_action_integrand_1d, rho, phi),
            -limit,
            limit,
            action_tol,
            breakpoints=_breakpoints(rho, limit, c1),
            max_evaluations=max_evaluations,
        )
    else:
        # n = 2 integrates x_2 over the whole line, n >= 3 integrates r = |x_perp| over the half line
        inner = (-limit, limit) if n == 2 else (0.0, limit)
        inner_breakpoints = _breakpoints(rho, limit, c2) if n == 2 else ()
        quad = nested_quad(
            functools.partial(_action_integrand, n, rho, phi),
            outer=(-limit, limit),
            inner=inner,
            tol=action_tol,
            outer_breakpoints=_breakpoints(rho, limit, c1),
            inner_breakpoints=(lambda _: inner_breakpoints),
            max_evaluations=max_evaluations,
        )
    quad = quad.copy(update={"cutoff": radius})
    if not quad.converged:
        logger.warning(f"product action n={n} rho={rho} phi={phi} did not converge: {quad.abs_error_estimate:.2e}")

    action = quad.value
    return ProductActionResult(
        n=n, rho=rho, phi=phi, action=action, normalized=2 * math.pi * rho * action, quad=quad
    )


@functools.lru_cache(maxsize=256)
def _unit_action(n: int, rho: float, tol: float, max_evaluations: int) -> ProductActionResult:
    return product_action(n, rho, TestFunction.constant(1.0), tol, max_evaluations=max_evaluations)


def localization_gap(
    n: int, rho: float, phi: TestFunction, tol: float, max_evaluations: int = DEFAULT_MAX_EVALUATIONS
) -> float:
    """``|2 pi rho <K_rho, phi> - phi(0) 2 pi rho <K_rho, 1>|``; vanishes as rho -> 0 when the product localizes."""
    result = product_action(n, rho, phi, tol, max_evaluations=max_evaluations)
    unit = _unit_action(n, rho, tol, max_evaluations)
    return abs(result.normalized - phi.value_at_origin * unit.normalized)


###################################################################################################################
# LADDERS & LAURENT FIT
###################################################################################################################


def _check_ladder(rho_ladder: Sequence[float], min_points: int = 1):
    if len(rho_ladder) < min_points:
        raise IllConditionedFitError(f"a rho ladder needs at least {min_points} points, got {len(rho_ladder)}")
    if any(not rho > 0 for rho in rho_ladder):
        raise ValueError(f"rho ladder must be positive: {list(rho_ladder)}")
    if any(later >= earlier for earlier, later in zip(rho_ladder[:-1], rho_ladder[1:])):
        raise ValueError(f"rho ladder must be strictly decreasing: {list(rho_ladder)}")


class _ActionAt:
    """Picklable ``rho -> product_action(n, rho, phi, tol)`` for worker pools."""

    def __init__(self, n: int, phi: TestFunction, tol: float, max_evaluations: int):
        self.n = n
        self.phi = phi
        self.tol = tol
        self.max_evaluations = max_evaluations

    def __call__(self, rho: float) -> ProductActionResult:
        return product_action(self.n, rho, self.phi, self.tol, max_evaluations=self.max_evaluations)


def ladder_actions(
    n: int,
    phi: TestFunction,
    rho_ladder: Sequence[float],
    tol: float,
    n_jobs: int = 1,
    max_evaluations: int = DEFAULT_MAX_EVALUATIONS,
) -> List[ProductActionResult]:
    _check_ladder(rho_ladder)
    return parallel_map(_ActionAt(n, phi, tol, max_evaluations), rho_ladder, n_jobs=n_jobs, desc=f"n={n} {phi}")


def gap_ladder(
    n: int,
    phi: TestFunction,
    rho_ladder: Sequence[float],
    tol: float,
    n_jobs: int = 1,
    max_evaluations: int = DEFAULT_MAX_EVALUATIONS,
) -> List[float]:
    """Localization gap at every ladder point, from one pass over phi and one over the constant function."""
    results = ladder_actions(n, phi, rho_ladder, tol, n_jobs=n_jobs, max_evaluations=max_evaluations)
    units = ladder_actions(
        n, TestFunction.constant(1.0), rho_ladder, tol, n_jobs=n_jobs, max_evaluations=max_evaluations
    )
    return localization_gaps(phi, results, units)


def localization_gaps(
    phi: TestFunction, results: Sequence[ProductActionResult], units: Sequence[ProductActionResult]
) -> List[float]:
    """Pointwise gaps between the pairings with phi and phi(0) times the pairings with the constant 1."""
    return [abs(r.normalized - phi.value_at_origin * u.normalized) for r, u in zip(results, units)]


def _laurent_design(rhos: np.ndarray) -> np.ndarray:
    """Columns ``1/rho, 1, log(rho), rho``, truncated to the number of ladder points.

    The trailing columns absorb the non-constant remainder of the action so that it does not leak into c_-1 and c_0.
    """
    columns = [1.0 / rhos, np.ones_like(rhos), np.log(rhos), rhos]
    return np.column_stack(columns[: min(len(rhos), len(columns))])


def fit_laurent_coefficients(rho_ladder: Sequence[float], actions: Sequence[float]) -> LaurentFit:
    """Least-squares fit of ``action(rho) = c_-1 / rho + c_0 + c_log log(rho) + c_1 rho``.

    Only c_-1 and c_0 are kept; two-point ladders fit the first two terms alone and three-point ladders add the log.
    """
    _check_ladder(rho_ladder, min_points=2)
    if len(actions) != len(rho_ladder):
        raise ValueError(f"{len(actions)} actions for {len(rho_ladder)} ladder points")
    rhos = np.asarray(rho_ladder, dtype=float)
    values = np.asarray(actions, dtype=float)
    design = _laurent_design(rhos)
    condition_number = float(np.linalg.cond(design))
    if not condition_number < MAX_FIT_CONDITION:
        raise IllConditionedFitError(
            f"rho ladder {list(rho_ladder)} is too clustered (condition {condition_number:.2e})"
        )

    coefficients, _, _, _ = scipy.linalg.lstsq(design, values)
    residual_norm = float(np.linalg.norm(design @ coefficients - values))
    c_minus1, c_0 = float(coefficients[0]), float(coefficients[1])
    logger.debug(
        f"Laurent fit on {design.shape[1]} terms: c_-1={c_minus1!r}, c_0={c_0!r}, residual={residual_norm:.2e}"
    )

    return LaurentFit(
        series=RhoSeries(terms={-1: c_minus1, 0: c_0}, truncation_order=0),
        rho_ladder=tuple(float(rho) for rho in rho_ladder),
        actions=tuple(float(a) for a in actions),
        residual_norm=residual_norm,
        condition_number=condition_number,
    )


def laurent_fit(
    n: int,
    phi: TestFunction,
    rho_ladder: Sequence[float],
    tol: float,
    n_jobs: int = 1,
    max_evaluations: int = DEFAULT_MAX_EVALUATIONS,
) -> RhoSeries:
    """Recover the rho^-1 and rho^0 coefficients of the product action from a ladder of finite-rho pairings."""
    results = ladder_actions(n, phi, rho_ladder, tol, n_jobs=n_jobs, max_evaluations=max_evaluations)
    for result in results:
        result.quad.require_converged(f"product action at rho={result.rho!r}")
    return fit_laurent_coefficients(rho_ladder, [result.action for result in results]).series
