import math
import pathlib
import sys
import traceback
from typing import Callable
from typing import List
from typing import Optional

import typer
from loguru import logger
from pydantic import ValidationError

from harmonic_product import __version__
from harmonic_product.core.utils.core_utils import parallel_map
from harmonic_product.exact import identities
from harmonic_product.numeric import mollified
from harmonic_product.numeric import quadrature
from harmonic_product.numeric.quadrature import AHatMethod
from harmonic_product.verify import export_results
from harmonic_product.verify.settings import Command
from harmonic_product.verify.settings import RunConfig

app = typer.Typer(add_completion=False, help="Verify the harmonic product of delta(x_1, ..., x_n) and delta(x_1).")

# Valid n per A_hat route; `None` means unbounded above
METHOD_N_BOUNDS = {
    AHatMethod.CLOSED_FORM: (1, None),
    AHatMethod.FORMULA: (3, None),
    AHatMethod.DIRECT: (1, 2),
    AHatMethod.RECURSION: (3, None),
}

_FORMAT = typer.Option(None, "--format", help="Report format: json, csv or text.")
_PARALLELISM = typer.Option(None, "--parallelism", help="Worker processes for independent rows.")
_TOL = typer.Option(None, "--tol", help="Absolute quadrature tolerance.")
_CONFIG = typer.Option(None, "--config", help="Optional `key = value` config file.")
_LOG_LEVEL = typer.Option(
    "WARNING", "--log-level", help="Any Python logging level: [DEBUG, INFO, WARNING, ERROR, CRITICAL]."
)
_LOG_JSON = typer.Option(False, "--log-json", help="Serialize logging information as JSON.")
_LOG_FILE = typer.Option(None, "--log-file", help="Also write logs to this file.")
_TIMINGS = typer.Option(False, "--timings", help="Record per-row wall-clock time (reports are then not reproducible).")
_OUTPUT = typer.Option(None, "--output", help="Write the report to this file instead of stdout.")
_RAISE_ON_ERROR = typer.Option(False, "--raise-on-error", help="Re-raise unexpected exceptions instead of exiting 1.")


def _configure_logging(log_level: str, log_json: bool, log_file: Optional[pathlib.Path]):
    # Reports own stdout; logs go to stderr
    logger.remove()
    try:
        logger.add(sys.__stderr__, level=log_level.upper(), serialize=log_json)
    except ValueError as e:
        raise typer.BadParameter(str(e), param_hint="--log-level")
    if log_file is not None:
        logger.add(log_file, level=log_level.upper(), serialize=log_json)
    logger.info(f"harmonic-product version: {__version__}")


def _load_config(config_file: Optional[pathlib.Path], **overrides) -> RunConfig:
    try:
        return RunConfig.load(config_file, **overrides)
    except (ValidationError, ValueError, FileNotFoundError) as e:
        raise typer.BadParameter(str(e))


def _emit(rows: List[dict], columns: List[str], config: RunConfig, output: Optional[pathlib.Path]):
    report = export_results.render(rows, columns, config.output_format)
    report = export_results.write_report(report, output)
    if report is not None:
        typer.echo(report, nl=False)


def _run(command: Callable[[], bool], raise_on_error: bool):
    """Run a command body; exit 1 on verification failure or (unless `raise_on_error`) on an unexpected error."""
    if raise_on_error:
        passed = command()
    else:
        try:
            passed = command()
        except Exception:
            logger.error("Run failed. See error traceback below:")
            logger.error(traceback.format_exc())
            passed = False
    if not passed:
        raise typer.Exit(code=1)


###################################################################################################################
# COMMANDS
###################################################################################################################


@app.command("identities")
def cmd_identities(
    theorem: Optional[str] = typer.Option(None, "--theorem", help="Identity to check: 2, 3, odd or even."),
    k: Optional[str] = typer.Option(None, "--k", help="Inclusive k range, e.g. 1..100."),
    output_format: Optional[str] = _FORMAT,
    parallelism: Optional[int] = _PARALLELISM,
    config_file: Optional[pathlib.Path] = _CONFIG,
    log_level: str = _LOG_LEVEL,
    log_json: bool = _LOG_JSON,
    log_file: Optional[pathlib.Path] = _LOG_FILE,
    timings: bool = _TIMINGS,
    output: Optional[pathlib.Path] = _OUTPUT,
    raise_on_error: bool = _RAISE_ON_ERROR,
):
    """Exact verification of the combinatorial identities and closed-form coefficients."""
    _configure_logging(log_level, log_json, log_file)
    config = _load_config(
        config_file,
        command=Command.IDENTITIES,
        theorem=theorem,
        k_range=k,
        output_format=output_format,
        parallelism=parallelism,
        timings=timings or None,
    )
    k_min, k_max = config.resolved_k_range
    if k_min < config.theorem.k_floor:
        raise typer.BadParameter(f"{config.theorem.value} needs k >= {config.theorem.k_floor}, got {k_min}..{k_max}")

    def body() -> bool:
        reports = identities.verify_range(config.theorem, k_min, k_max, n_jobs=config.parallelism)
        rows = [export_results.identity_row(report, timings=config.timings) for report in reports]
        _emit(rows, export_results.IDENTITY_COLUMNS, config, output)
        return all(report.verified for report in reports)

    _run(body, raise_on_error)


class _AHatAt:
    """Picklable ``n -> a_hat(n, method, tol)`` for worker pools."""

    def __init__(self, config: RunConfig):
        self.config = config

    def __call__(self, n: int) -> quadrature.AHatEvaluation:
        method = self.config.method_for(n)
        return quadrature.a_hat(n, method, self.config.tol, max_evaluations=self.config.max_evaluations)


@app.command("ahat")
def cmd_ahat(
    n: Optional[str] = typer.Option(None, "--n", help="Inclusive dimension range, e.g. 3..8."),
    method: Optional[str] = typer.Option(
        None, "--method", help="closed, formula, direct or recursion; default direct for n <= 2, formula otherwise."
    ),
    tol: Optional[float] = _TOL,
    output_format: Optional[str] = _FORMAT,
    parallelism: Optional[int] = _PARALLELISM,
    config_file: Optional[pathlib.Path] = _CONFIG,
    log_level: str = _LOG_LEVEL,
    log_json: bool = _LOG_JSON,
    log_file: Optional[pathlib.Path] = _LOG_FILE,
    output: Optional[pathlib.Path] = _OUTPUT,
    raise_on_error: bool = _RAISE_ON_ERROR,
):
    """Evaluate A_hat(n) = rho * A(1, n) and compare it with 1 / (2 pi)."""
    _configure_logging(log_level, log_json, log_file)
    config = _load_config(
        config_file,
        command=Command.AHAT,
        n_range=n,
        method=method,
        tol=tol,
        output_format=output_format,
        parallelism=parallelism,
    )
    n_min, n_max = config.n_range
    for dimension in (n_min, n_max):
        lower, upper = METHOD_N_BOUNDS[config.method_for(dimension)]
        if dimension < lower or (upper is not None and dimension > upper):
            raise typer.BadParameter(f"method {config.method_for(dimension).value} does not support n = {dimension}")

    def body() -> bool:
        evaluations = parallel_map(_AHatAt(config), range(n_min, n_max + 1), n_jobs=config.parallelism, desc="A_hat")
        rows = [export_results.ahat_row(evaluation) for evaluation in evaluations]
        _emit(rows, export_results.AHAT_COLUMNS, config, output)
        failures = [row["n"] for row in rows if not row["converged"] or not row["abs_dev"] <= 10 * config.tol]
        if failures:
            logger.error(f"A_hat deviates from 1/(2 pi) by more than {10 * config.tol:.1e} for n in {failures}")
        return not failures

    _run(body, raise_on_error)


@app.command("product")
def cmd_product(
    n: Optional[int] = typer.Option(None, "--n", help="Dimension of delta(x_1, ..., x_n) [default: 3]."),
    phi: Optional[str] = typer.Option(
        None, "--phi", help="Test function: gaussian:W, shifted:C1[/C2...]:W, bump:R or const:L."
    ),
    ladder: Optional[str] = typer.Option(None, "--ladder", help="Strictly decreasing rho values, e.g. 1e-1,5e-2."),
    rho: Optional[float] = typer.Option(None, "--rho", help="Single rho (overrides the ladder)."),
    rtol: Optional[float] = typer.Option(None, "--rtol", help="Relative tolerance of the c_-1 check."),
    atol: Optional[float] = typer.Option(None, "--atol", help="Absolute tolerance of the c_-1 check."),
    tol: Optional[float] = _TOL,
    output_format: Optional[str] = _FORMAT,
    parallelism: Optional[int] = _PARALLELISM,
    config_file: Optional[pathlib.Path] = _CONFIG,
    log_level: str = _LOG_LEVEL,
    log_json: bool = _LOG_JSON,
    log_file: Optional[pathlib.Path] = _LOG_FILE,
    output: Optional[pathlib.Path] = _OUTPUT,
    raise_on_error: bool = _RAISE_ON_ERROR,
):
    """Simulate the product at finite rho and check that its rho^-1 coefficient is phi(0) / (2 pi)."""
    _configure_logging(log_level, log_json, log_file)
    config = _load_config(
        config_file,
        command=Command.PRODUCT,
        dimension=n,
        phi=phi,
        rho_ladder=ladder,
        rho=rho,
        rtol=rtol,
        atol=atol,
        tol=tol,
        output_format=output_format,
        parallelism=parallelism,
    )
    n = config.dimension
    try:
        test_function = mollified.TestFunction.parse(config.phi)
    except ValueError as e:
        raise typer.BadParameter(str(e))
    if n >= 3 and not test_function.is_axial:
        raise typer.BadParameter(f"{test_function} is not axially symmetric about the x_1 axis")
    if not test_function.is_compact:
        logger.info(f"{test_function} is not compactly supported (non-compact convenience)")

    def body() -> bool:
        rhos = config.ladder
        kwargs = dict(n_jobs=config.parallelism, max_evaluations=config.max_evaluations)
        results = mollified.ladder_actions(n, test_function, rhos, config.tol, **kwargs)
        units = mollified.ladder_actions(n, mollified.TestFunction.constant(1.0), rhos, config.tol, **kwargs)
        gaps = mollified.localization_gaps(test_function, results, units)

        phi_at_0 = test_function.value_at_origin
        if len(rhos) >= 2:
            fit = mollified.fit_laurent_coefficients(rhos, [result.action for result in results])
            c_minus1 = fit.c_minus1
            expected = phi_at_0 / (2 * math.pi)
            passed = abs(c_minus1 - expected) <= config.rtol * abs(expected) + config.atol
            logger.info(f"fitted c_-1 = {c_minus1!r}, expected phi(0)/(2 pi) = {expected!r}")
        else:
            c_minus1 = None
            normalized = results[0].normalized
            passed = abs(normalized - phi_at_0) <= config.rtol * abs(phi_at_0) + config.atol
            logger.info(f"normalized action = {normalized!r}, expected phi(0) = {phi_at_0!r}")

        rows = [export_results.product_row(result, gap, c_minus1) for result, gap in zip(results, gaps)]
        _emit(rows, export_results.PRODUCT_COLUMNS, config, output)
        passed &= all(result.quad.converged for result in results)
        if not passed:
            logger.error(f"product check failed for n={n}, phi={test_function}")
        return passed

    _run(body, raise_on_error)


if __name__ == "__main__":
    from rich.traceback import install

    install()
    app()
