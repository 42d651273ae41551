"""Report rows and their JSON / CSV / text renderings.

Report columns are a public contract (covered by golden files in ``tests/data``). Rationals are written as
``"num/den"`` strings and PiScaled values as ``{"q": "num/den", "e": int, "float": value}``.
"""
import pathlib
from fractions import Fraction
from typing import Any
from typing import Dict
from typing import List
from typing import Optional
from typing import Sequence

import pandas as pd
import ujson
from loguru import logger

from harmonic_product.core.custom_model import format_fraction
from harmonic_product.exact.exactnum import PiScaled
from harmonic_product.exact.identities import IdentityReport
from harmonic_product.exact.identities import ONE_OVER_TWO_PI
from harmonic_product.numeric.mollified import ProductActionResult
from harmonic_product.numeric.quadrature import AHatEvaluation
from harmonic_product.verify.settings import OutputFormat

IDENTITY_COLUMNS = ["theorem", "k", "lhs", "rhs", "verified", "term_count", "ms"]
AHAT_COLUMNS = ["n", "method", "value", "expected", "abs_dev", "converged"]
PRODUCT_COLUMNS = ["n", "rho", "phi", "action", "normalized", "c_minus1_fit", "gap", "noncompact"]

EXPECTED_A_HAT = float(ONE_OVER_TWO_PI)


def to_report_value(value: Any) -> Any:
    if isinstance(value, Fraction):
        return format_fraction(value)
    if isinstance(value, PiScaled):
        return value.to_dict()
    return value


def identity_row(report: IdentityReport, timings: bool = False) -> Dict[str, Any]:
    return {
        "theorem": report.theorem.value,
        "k": report.k,
        "lhs": to_report_value(report.lhs),
        "rhs": to_report_value(report.rhs),
        "verified": report.verified,
        "term_count": report.term_count,
        "ms": 1e3 * report.elapsed if timings else None,
    }


def ahat_row(evaluation: AHatEvaluation) -> Dict[str, Any]:
    return {
        "n": evaluation.n,
        "method": evaluation.method.value,
        "value": to_report_value(evaluation.value),
        "expected": EXPECTED_A_HAT,
        "abs_dev": abs_deviation(evaluation),
        "converged": evaluation.converged,
    }


def abs_deviation(evaluation: AHatEvaluation) -> float:
    if evaluation.exact and evaluation.value == ONE_OVER_TWO_PI:
        return 0.0
    return abs(float(evaluation) - EXPECTED_A_HAT)


def product_row(result: ProductActionResult, gap: float, c_minus1_fit: Optional[float]) -> Dict[str, Any]:
    return {
        "n": result.n,
        "rho": result.rho,
        "phi": str(result.phi),
        "action": result.action,
        "normalized": result.normalized,
        "c_minus1_fit": c_minus1_fit,
        "gap": gap,
        "noncompact": result.noncompact,
    }


###################################################################################################################
# RENDERING
###################################################################################################################


def to_json(rows: Sequence[Dict[str, Any]]) -> str:
    return ujson.dumps(list(rows), sort_keys=True, indent=2) + "\n"


def to_frame(rows: Sequence[Dict[str, Any]], columns: List[str]) -> pd.DataFrame:
    """Flatten rows into a table; PiScaled columns expand to ``<column>_q``, ``<column>_e`` and ``<column>_float``."""
    if not rows:
        return pd.DataFrame(columns=columns)
    return pd.json_normalize(list(rows), sep="_")


def render(rows: Sequence[Dict[str, Any]], columns: List[str], output_format: OutputFormat) -> str:
    if output_format is OutputFormat.JSON:
        return to_json(rows)
    df = to_frame(rows, columns)
    if output_format is OutputFormat.CSV:
        return df.to_csv(index=False, lineterminator="\n")
    return df.to_string(index=False) + "\n"


def write_report(report: str, output: Optional[pathlib.Path] = None) -> Optional[str]:
    """Write to `output` when given; otherwise hand the text back for stdout."""
    if output is None:
        return report
    output = pathlib.Path(output)
    output.parent.mkdir(parents=True, exist_ok=True)
    output.write_text(report)
    logger.info(f"Report written to {output.absolute()}")
    return None
