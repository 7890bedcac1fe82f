#!/usr/bin/python3

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import psutil
from rich.console import Console
from rich.table import Table

from Waveguide_Post_Solver.config import RunConfig
from Waveguide_Post_Solver.data_model import ConvergenceReport, SweepTable
from Waveguide_Post_Solver.errors import InvalidInput, SolverError
from Waveguide_Post_Solver.junction import Discretization, PostJunction, solve_junction
from Waveguide_Post_Solver.network import frequency_sweep
from Waveguide_Post_Solver.output import (
    write_csv,
    write_json_report,
    write_touchstone,
)
from Waveguide_Post_Solver.validation import collocation_smatrix

from .logging_config import get_logger, log_operation, log_performance

logger = get_logger(__name__)

DEFAULT_CONVERGENCE_MODES = (40, 50, 60, 70)
VALIDATION_FREQUENCIES = 5
VALIDATION_TOLERANCE = 1e-2
VALIDATION_COLUMNS = (
    "h [mm]",
    "R [mm]",
    "f [GHz]",
    "|S11| proj",
    "|S11| coll",
    "|S21| proj",
    "|S21| coll",
    "max diff",
)


def report_resource_usage(stage: str) -> None:
    """Log system memory usage and the resident size of this process."""
    mem = psutil.virtual_memory()
    rss = psutil.Process().memory_info().rss
    logger.info(
        "[%s] Memory: %.1f%% used, process RSS %.1f MiB",
        stage,
        mem.percent,
        rss / (1024 * 1024),
    )


@log_performance
def run_sweep(cfg: RunConfig, show_progress: bool = False) -> SweepTable:
    """
    Sweep the configured structure and write the requested output files.

    Per-point failures are kept in the table and the CSV; they never abort the run.
    """
    net = cfg.build_network()
    settings = cfg.sweep_settings()

    with log_operation(
        "sweep",
        modes=settings.M,
        points=cfg.sweep.n_points,
        threads=cfg.numerics.threads,
    ):
        logger.info(
            "Sweeping %d posts from %.4g to %.4g GHz (%d points, M=%d)",
            len(net.junctions),
            cfg.sweep.f_start_ghz,
            cfg.sweep.f_stop_ghz,
            cfg.sweep.n_points,
            settings.M,
        )
        table = frequency_sweep(
            net,
            settings,
            cfg.f_start,
            cfg.f_stop,
            cfg.sweep.n_points,
            workers=cfg.numerics.threads,
            show_progress=show_progress,
        )

    write_csv(table, Path(cfg.output.csv), cfg.output.parameters)
    if cfg.output.touchstone and table.successful():
        write_touchstone(table, Path(cfg.output.touchstone))
    elif cfg.output.touchstone:
        logger.error("No point succeeded; Touchstone file not written")
    return table


@log_performance
def run_convergence(
    cfg: RunConfig,
    modes: Sequence[int] = DEFAULT_CONVERGENCE_MODES,
    threshold_db: float = 0.1,
    report_path: Optional[Path] = None,
    show_progress: bool = False,
) -> ConvergenceReport:
    """
    Repeat the sweep for each mode count and compare fundamental |S21| in dB.

    ``converged_at`` is the larger M of the first neighbouring pair whose largest
    difference is within ``threshold_db``.
    """
    modes = list(modes)
    if not modes:
        raise InvalidInput("at least one mode count is required", "modes")
    if any(b <= a for a, b in zip(modes, modes[1:])):
        raise InvalidInput(f"mode counts must be strictly ascending, got {modes}", "modes")

    net = cfg.build_network()
    tables = {}
    with log_operation("convergence", modes=modes):
        for M in modes:
            settings = cfg.with_overrides(modes=M).sweep_settings()
            logger.info("Convergence sweep with M=%d", M)
            tables[M] = frequency_sweep(
                net,
                settings,
                cfg.f_start,
                cfg.f_stop,
                cfg.sweep.n_points,
                workers=cfg.numerics.threads,
                show_progress=show_progress,
            )

    report = ConvergenceReport(tables, threshold_db)
    for lo, hi, delta in report.deltas:
        logger.info("M=%d -> M=%d: max |delta S21| = %.4g dB", lo, hi, delta)
    if report_path is not None:
        write_json_report(report.to_json(), report_path)
    return report


@dataclass(frozen=True)
class ValidationRow:
    h: float
    R: float
    frequency: float
    projection: Optional[np.ndarray] = None
    collocation: Optional[np.ndarray] = None
    message: str = ""

    @property
    def difference(self) -> float:
        """Largest absolute difference of fundamental |S11| and |S21|."""
        if self.projection is None or self.collocation is None:
            return float("nan")
        return float(np.max(np.abs(self.projection - self.collocation)))


@dataclass
class ValidationReport:
    rows: List[ValidationRow] = field(default_factory=list)
    tolerance: float = VALIDATION_TOLERANCE

    @property
    def passed(self) -> bool:
        return bool(self.rows) and all(
            row.difference <= self.tolerance for row in self.rows
        )

    def to_json(self):
        return {
            "tolerance": self.tolerance,
            "passed": self.passed,
            "rows": [
                {
                    "h_m": row.h,
                    "R_m": row.R,
                    "f_Hz": row.frequency,
                    "difference": None if np.isnan(row.difference) else row.difference,
                    "message": row.message,
                }
                for row in self.rows
            ],
        }


def _magnitudes(S) -> np.ndarray:
    f = S.fundamental()
    return np.abs(np.array([f[0, 0], f[1, 0]]))


def _distinct_posts(cfg: RunConfig) -> List[PostJunction]:
    posts: List[PostJunction] = []
    for junction in cfg.build_network().junctions:
        if junction not in posts:
            posts.append(junction)
    return posts


@log_performance
def run_validation(
    cfg: RunConfig,
    n_frequencies: int = VALIDATION_FREQUENCIES,
    tolerance: float = VALIDATION_TOLERANCE,
    console: Optional[Console] = None,
    report_path: Optional[Path] = None,
) -> ValidationReport:
    """Compare projection and collocation solves for every distinct post of the config."""
    M = cfg.numerics.modes
    policy = cfg.numerics.policy()
    frequencies = np.linspace(cfg.f_start, cfg.f_stop, n_frequencies)
    report = ValidationReport(tolerance=tolerance)

    with log_operation("validation", modes=M, frequencies=n_frequencies):
        for junction in _distinct_posts(cfg):
            disc: Discretization = policy.for_junction(junction, M)
            for f in frequencies:
                try:
                    projection = solve_junction(
                        junction,
                        disc,
                        M,
                        float(f),
                        cfg.numerics.quadrature_order,
                        cfg.numerics.rcond,
                    )
                    collocation = collocation_smatrix(junction, M, None, float(f))
                except SolverError as e:
                    logger.error("Validation at %.9g Hz failed: %s", f, e)
                    report.rows.append(
                        ValidationRow(junction.h, junction.R, float(f), message=str(e))
                    )
                    continue
                report.rows.append(
                    ValidationRow(
                        junction.h,
                        junction.R,
                        float(f),
                        _magnitudes(projection),
                        _magnitudes(collocation),
                    )
                )

    print_validation(report, console or Console())
    if report_path is not None:
        write_json_report(report.to_json(), report_path)
    return report


def print_validation(report: ValidationReport, console: Console) -> None:
    table = Table(title="Projection vs collocation (fundamental mode)")
    for column in VALIDATION_COLUMNS:
        table.add_column(column, justify="right")

    for row in report.rows:
        if row.projection is None:
            table.add_row(
                f"{row.h * 1e3:.4f}",
                f"{row.R * 1e3:.4f}",
                f"{row.frequency / 1e9:.4f}",
                *["-"] * 4,
                row.message[:40],
            )
            continue
        table.add_row(
            f"{row.h * 1e3:.4f}",
            f"{row.R * 1e3:.4f}",
            f"{row.frequency / 1e9:.4f}",
            f"{row.projection[0]:.5f}",
            f"{row.collocation[0]:.5f}",
            f"{row.projection[1]:.5f}",
            f"{row.collocation[1]:.5f}",
            f"{row.difference:.2e}",
        )

    console.print(table)
    verdict = "[green]PASS[/green]" if report.passed else "[red]FAIL[/red]"
    console.print(f"{verdict} (tolerance {report.tolerance:g})")


def main() -> None:
    """Entry point for ``python -m Waveguide_Post_Solver``."""
    from Waveguide_Post_Solver.cli import app

    app()


if __name__ == "__main__":
    main()
