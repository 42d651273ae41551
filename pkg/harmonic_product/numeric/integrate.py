"""Adaptive Gauss-Kronrod (7/15) quadrature with explicit error and evaluation bookkeeping.

The engine bisects the panel with the largest error estimate until the summed estimate drops below the requested
tolerance or the evaluation budget is spent. Panel selection is ordered by (error, creation index), so a given
integrand and tolerance always produce the same panel tree.
"""
import functools
import heapq
import math
from typing import Callable
from typing import NamedTuple
from typing import Optional
from typing import Sequence
from typing import Tuple
from typing import Union

import numpy as np
from loguru import logger
from pydantic import root_validator

from harmonic_product.core.custom_model import CustomModel

DEFAULT_MAX_EVALUATIONS = 10_000_000

# Kronrod abscissae on [0, 1] (descending) and weights; Gauss 7-point weights belong to abscissae 1, 3, 5, 7
_XGK = np.array(
    [
        0.991455371120812639206854697526329,
        0.949107912342758524526189684047851,
        0.864864423359769072789712788640926,
        0.741531185599394439863864773280788,
        0.586087235467691130294144845693013,
        0.405845151377397166906606412076961,
        0.207784955007898467600689403773245,
        0.000000000000000000000000000000000,
    ]
)
_WGK = np.array(
    [
        0.022935322010529224963732008058970,
        0.063092092629978553290700663189204,
        0.104790010322250183839876322541518,
        0.140653259715525918745189590510238,
        0.169004726639267902826583426598550,
        0.190350578064785409913256402421014,
        0.204432940075298892414161999234649,
        0.209482141084727828012999174891714,
    ]
)
_WG = np.array(
    [
        0.129484966168869693270611432679082,
        0.279705391489276667901467771423780,
        0.381830050505118944950369775488975,
        0.417959183673469387755102040816327,
    ]
)

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[[1, 3, 5]] = _WG[:3]
GAUSS_WEIGHTS[[13, 11, 9]] = _WG[:3]
GAUSS_WEIGHTS[7] = _WG[3]


class QuadratureError(RuntimeError):
    pass


class QuadResult(CustomModel):
    value: float
    abs_error_estimate: float
    evaluations: int
    converged: bool
    tolerance: float
    # Truncation radius of an originally unbounded domain, when one was applied
    cutoff: Optional[float] = None

    @root_validator(skip_on_failure=True)
    def _consistent(cls, values):
        if values["abs_error_estimate"] < 0 or math.isnan(values["abs_error_estimate"]):
            raise ValueError(f"abs_error_estimate must be >= 0, got {values['abs_error_estimate']}")
        if values["evaluations"] <= 0:
            raise ValueError("a quadrature result needs at least one evaluation")
        if values["converged"] and values["abs_error_estimate"] > values["tolerance"]:
            raise ValueError("a converged result cannot report an error above the requested tolerance")
        return values

    def require_converged(self, what: str) -> "QuadResult":
        if not self.converged:
            raise QuadratureError(
                f"{what} did not converge: error estimate {self.abs_error_estimate:.2e} > tolerance {self.tolerance:.2e} "
                f"after {self.evaluations} evaluations"
            )
        return self


class PanelSample(NamedTuple):
    """Integrand output for integrands that are themselves approximate (e.g. inner integrals)."""

    values: np.ndarray
    errors: np.ndarray
    evaluations: int
    converged: bool = True


class _Panel(NamedTuple):
    a: float
    b: float
    value: float
    error: float


def _evaluate_panel(func: Callable, a: float, b: float) -> Tuple[_Panel, int, bool]:
    center = 0.5 * (a + b)
    half_width = 0.5 * (b - a)
    sample = func(center + half_width * NODES)
    if isinstance(sample, PanelSample):
        values, inner_errors, evaluations, converged = sample
    else:
        values, inner_errors, evaluations, converged = np.asarray(sample, dtype=float), None, len(NODES), True

    kronrod = half_width * float(np.dot(KRONROD_WEIGHTS, values))
    gauss = half_width * float(np.dot(GAUSS_WEIGHTS, values))
    error = abs(kronrod - gauss)
    if inner_errors is not None:
        error += half_width * float(np.dot(KRONROD_WEIGHTS, inner_errors))
    if not (math.isfinite(kronrod) and math.isfinite(error)):
        error = math.inf

    return _Panel(a, b, kronrod, error), evaluations, converged


def adaptive_quad(
    func: Callable[[np.ndarray], Union[np.ndarray, PanelSample]],
    a: float,
    b: float,
    tol: float,
    breakpoints: Sequence[float] = (),
    max_evaluations: int = DEFAULT_MAX_EVALUATIONS,
) -> QuadResult:
    """Integrate a vectorised function over ``[a, b]`` to an absolute tolerance.

    Args:
        func: maps an array of abscissae to an array of values, or to a `PanelSample` carrying per-node errors
        a: lower limit (finite)
        b: upper limit (finite, > a)
        tol: requested absolute error
        breakpoints: interior points that seed the initial panel grid
        max_evaluations: evaluation budget; exceeding it yields ``converged=False``

    Returns:
        result: value, error estimate, evaluation count and convergence flag
    """
    if not tol > 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    if not (math.isfinite(a) and math.isfinite(b) and b > a):
        raise ValueError(f"integration limits must be finite with b > a, got [{a}, {b}]")

    edges = [a] + sorted(x for x in set(breakpoints) if a < x < b) + [b]
    heap = []
    counter = 0
    evaluations = 0
    samples_converged = True
    total_error = 0.0
    for left, right in zip(edges[:-1], edges[1:]):
        panel, count, converged = _evaluate_panel(func, left, right)
        heapq.heappush(heap, (-panel.error, counter, panel))
        counter += 1
        evaluations += count
        samples_converged &= converged
        total_error += panel.error

    converged = False
    while True:
        if total_error <= tol:
            # Re-sum to rule out drift in the running total
            total_error = math.fsum(item[2].error for item in heap)
            if total_error <= tol:
                converged = True
                break
        if evaluations >= max_evaluations:
            logger.debug(f"Quadrature budget of {max_evaluations} evaluations exhausted on [{a}, {b}]")
            break

        _, _, worst = heap[0]
        middle = 0.5 * (worst.a + worst.b)
        if not worst.a < middle < worst.b:
            logger.debug(f"Quadrature cannot bisect [{worst.a}, {worst.b}] any further")
            break
        heapq.heappop(heap)
        total_error -= worst.error
        for left, right in ((worst.a, middle), (middle, worst.b)):
            panel, count, sample_converged = _evaluate_panel(func, left, right)
            heapq.heappush(heap, (-panel.error, counter, panel))
            counter += 1
            evaluations += count
            samples_converged &= sample_converged
            total_error += panel.error
        if not math.isfinite(total_error):
            total_error = math.fsum(item[2].error for item in heap)

    value = math.fsum(item[2].value for item in heap)
    total_error = math.fsum(item[2].error for item in heap)

    return QuadResult(
        value=value,
        abs_error_estimate=total_error,
        evaluations=evaluations,
        converged=converged and samples_converged,
        tolerance=tol,
    )


def _inner_sample(
    integrand: Callable,
    inner: Union[Tuple[float, float], Callable],
    inner_breakpoints: Optional[Callable],
    tol: float,
    max_evaluations: int,
    xs: np.ndarray,
) -> PanelSample:
    values = np.empty_like(xs)
    errors = np.empty_like(xs)
    evaluations = 0
    converged = True
    for i, x in enumerate(xs):
        lower, upper = inner(x) if callable(inner) else inner
        breakpoints = inner_breakpoints(x) if inner_breakpoints is not None else ()
        result = adaptive_quad(
            functools.partial(integrand, x),
            lower,
            upper,
            tol,
            breakpoints=breakpoints,
            max_evaluations=max_evaluations,
        )
        values[i] = result.value
        errors[i] = result.abs_error_estimate
        evaluations += result.evaluations
        converged &= result.converged

    return PanelSample(values, errors, evaluations, converged)


def nested_quad(
    integrand: Callable[[float, np.ndarray], np.ndarray],
    outer: Tuple[float, float],
    inner: Union[Tuple[float, float], Callable[[float], Tuple[float, float]]],
    tol: float,
    outer_breakpoints: Sequence[float] = (),
    inner_breakpoints: Optional[Callable[[float], Sequence[float]]] = None,
    max_evaluations: int = DEFAULT_MAX_EVALUATIONS,
) -> QuadResult:
    """Iterated 2D integral ``int_outer dx int_inner(x) dy integrand(x, y)``.

    Inner integrals are solved to ``tol / (2 |outer|)`` so their propagated error contributes at most half the budget;
    inner error estimates are summed in absolute value into the outer panel errors.
    """
    a, b = outer
    inner_tol = tol / (2.0 * (b - a))
    sampler = functools.partial(_inner_sample, integrand, inner, inner_breakpoints, inner_tol, max_evaluations)

    return adaptive_quad(sampler, a, b, tol, breakpoints=outer_breakpoints, max_evaluations=max_evaluations)
