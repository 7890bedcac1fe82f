"""Typer command line: ``sweep``, ``converge`` and ``validate``."""

import logging
from pathlib import Path
from typing import List, Optional

import typer

from . import __main__
from .config import RunConfig, load_config
from .errors import (
    ConfigParseError,
    ConfigValidationError,
    InvalidInput,
    SolverError,
)
from .logging_config import setup_logging

app = typer.Typer(help="Waveguide post solver: S-parameters of inductive post structures")

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2


def _fail(error: Exception) -> typer.Exit:
    if isinstance(error, (ConfigParseError, ConfigValidationError, InvalidInput)):
        logger.error("Invalid configuration: %s", error)
        return typer.Exit(EXIT_CONFIG)
    logger.error("Numerical failure: %s", error)
    return typer.Exit(EXIT_NUMERICAL)


def _prepare(
    config: Path,
    verbose: bool,
    log_dir: Optional[Path],
    **overrides,
) -> RunConfig:
    if log_dir is not None:
        setup_logging(log_dir, "DEBUG" if verbose else "INFO", verbose)
    else:
        logging.basicConfig(
            level=logging.DEBUG if verbose else logging.INFO,
            format="%(levelname)s: %(message)s",
        )
    cfg = load_config(config)
    return cfg.with_overrides(**overrides)


@app.command()
def sweep(
    config: Path = typer.Argument(..., help="JSON run configuration"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="CSV path"),
    touchstone: Optional[Path] = typer.Option(None, "--touchstone", help=".s2p path"),
    threads: Optional[int] = typer.Option(None, "--threads", "-j", min=1),
    quadrature_order: Optional[int] = typer.Option(None, "--quadrature-order", min=1),
    modes: Optional[int] = typer.Option(None, "--modes", "-M", min=1),
    progress: bool = typer.Option(False, "--progress", help="Show a progress bar"),
    verbose: bool = typer.Option(False, "--verbose", "-v"),
    log_dir: Optional[Path] = typer.Option(None, "--log-dir", help="Write JSON logs here"),
) -> None:
    """Sweep the configured structure and write CSV (and optionally Touchstone)."""
    try:
        cfg = _prepare(
            config,
            verbose,
            log_dir,
            output=output,
            touchstone=touchstone,
            threads=threads,
            quadrature_order=quadrature_order,
            modes=modes,
        )
        table = __main__.run_sweep(cfg, show_progress=progress)
    except SolverError as e:
        raise _fail(e)
    finally:
        __main__.report_resource_usage("sweep")

    if not table.successful():
        logger.error("Every sweep point failed")
        raise typer.Exit(EXIT_NUMERICAL)


@app.command()
def converge(
    config: Path = typer.Argument(..., help="JSON run configuration"),
    modes: List[int] = typer.Option(
        list(__main__.DEFAULT_CONVERGENCE_MODES),
        "--modes",
        "-M",
        help="Mode counts, ascending; repeat the option for each",
    ),
    threshold_db: float = typer.Option(0.1, "--threshold-db"),
    report: Optional[Path] = typer.Option(None, "--report", help="JSON report path"),
    threads: Optional[int] = typer.Option(None, "--threads", "-j", min=1),
    quadrature_order: Optional[int] = typer.Option(None, "--quadrature-order", min=1),
    progress: bool = typer.Option(False, "--progress"),
    verbose: bool = typer.Option(False, "--verbose", "-v"),
    log_dir: Optional[Path] = typer.Option(None, "--log-dir"),
) -> None:
    """Sweep at several mode counts and report the change of |S21| between them."""
    try:
        cfg = _prepare(
            config,
            verbose,
            log_dir,
            threads=threads,
            quadrature_order=quadrature_order,
        )
        result = __main__.run_convergence(
            cfg, modes, threshold_db, report, show_progress=progress
        )
    except SolverError as e:
        raise _fail(e)
    finally:
        __main__.report_resource_usage("converge")

    for lo, hi, delta in result.deltas:
        typer.echo(f"M={lo} -> M={hi}: max |dS21| = {delta:.4f} dB")
    if result.converged_at is not None:
        typer.echo(f"converged at M={result.converged_at}")
    elif result.deltas:
        typer.echo(f"not converged within {threshold_db} dB")


@app.command()
def validate(
    config: Path = typer.Argument(..., help="JSON run configuration"),
    frequencies: int = typer.Option(5, "--frequencies", min=1),
    tolerance: float = typer.Option(1e-2, "--tolerance"),
    report: Optional[Path] = typer.Option(None, "--report", help="JSON report path"),
    quadrature_order: Optional[int] = typer.Option(None, "--quadrature-order", min=1),
    modes: Optional[int] = typer.Option(None, "--modes", "-M", min=1),
    verbose: bool = typer.Option(False, "--verbose", "-v"),
    log_dir: Optional[Path] = typer.Option(None, "--log-dir"),
) -> None:
    """Compare the projection solver against point collocation for each post."""
    try:
        cfg = _prepare(
            config,
            verbose,
            log_dir,
            quadrature_order=quadrature_order,
            modes=modes,
        )
        result = __main__.run_validation(
            cfg, frequencies, tolerance, report_path=report
        )
    except SolverError as e:
        raise _fail(e)
    finally:
        __main__.report_resource_usage("validate")

    if not result.passed:
        raise typer.Exit(EXIT_NUMERICAL)


if __name__ == "__main__":
    app()
