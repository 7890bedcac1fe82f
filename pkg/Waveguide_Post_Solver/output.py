"""Result files: sweep CSV, two-port Touchstone and JSON reports."""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Sequence

import numpy as np
import skrf as rf

from Waveguide_Post_Solver.data_model import PARAMETERS, SweepTable
from Waveguide_Post_Solver.errors import InvalidInput

logger = logging.getLogger(__name__)

NUMBER_FORMAT = "%.12e"
REFERENCE_IMPEDANCE = 50.0
TOUCHSTONE_COMMENT = (
    "TE10 fundamental mode of a rectangular waveguide, power-normalized modal "
    "amplitudes; the 50 ohm reference is nominal"
)


def csv_columns(parameters: Sequence[str]) -> List[str]:
    """Header of the sweep CSV for the requested parameters, in canonical order."""
    unknown = [name for name in parameters if name not in PARAMETERS]
    if unknown:
        raise InvalidInput(f"unknown S-parameters {unknown}", "parameters")
    columns = ["f_Hz"]
    for name in _ordered(parameters):
        columns += [f"{name}_re", f"{name}_im", f"{name}_dB", f"{name}_deg"]
    columns.append("status")
    return columns


def _ordered(parameters: Sequence[str]) -> List[str]:
    return [name for name in ("S11", "S21", "S12", "S22") if name in parameters]


def _number(value: float) -> str:
    return NUMBER_FORMAT % value


def csv_rows(table: SweepTable, parameters: Sequence[str]) -> List[List[str]]:
    names = _ordered(parameters)
    values = {name: table.parameter(name) for name in names}
    rows = []
    for i, point in enumerate(table):
        row = [_number(point.frequency)]
        for name in names:
            if not point.ok:
                row += [_number(np.nan)] * 4
                continue
            s = values[name][i]
            with np.errstate(divide="ignore", invalid="ignore"):
                magnitude_db = 20.0 * np.log10(np.abs(s))
            row += [
                _number(s.real),
                _number(s.imag),
                _number(magnitude_db),
                _number(np.degrees(np.angle(s))),
            ]
        row.append(point.status)
        rows.append(row)
    return rows


def write_csv(table: SweepTable, path: Path, parameters: Sequence[str]) -> Path:
    """
    Write the fundamental-mode sweep table.

    Columns: ``f_Hz``, then ``P_re, P_im, P_dB, P_deg`` for each parameter P in the
    order S11, S21, S12, S22, then ``status``. Failed points hold ``nan``.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(csv_columns(parameters))
        writer.writerows(csv_rows(table, parameters))
    logger.info("Wrote %d sweep points to %s", len(table), path)
    return path


def to_skrf_network(table: SweepTable, name: str = "waveguide_posts") -> rf.Network:
    """Two-port scikit-rf network of the fundamental mode at the successful points."""
    points = table.successful()
    if not points:
        raise InvalidInput("no successful sweep points to export", "table")
    frequency = rf.Frequency.from_f([p.frequency for p in points], unit="Hz")
    s = np.stack([p.smatrix.fundamental() for p in points])
    return rf.Network(
        frequency=frequency,
        s=s,
        z0=REFERENCE_IMPEDANCE,
        name=name,
        comments=TOUCHSTONE_COMMENT,
    )


def write_touchstone(table: SweepTable, path: Path) -> Path:
    """Write an ``.s2p`` file (RI format, Hz) of the fundamental-mode block."""
    path = Path(path)
    if path.suffix.lower() != ".s2p":
        path = path.with_suffix(".s2p")
    path.parent.mkdir(parents=True, exist_ok=True)
    network = to_skrf_network(table, name=path.stem)
    network.write_touchstone(
        filename=path.stem, dir=str(path.parent), form="ri", skrf_comment=False
    )
    skipped = len(table) - len(table.successful())
    if skipped:
        logger.warning("Touchstone file omits %d failed sweep points", skipped)
    logger.info("Wrote Touchstone file %s", path)
    return path


def write_json_report(report: Dict[str, Any], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report, f, indent=2)
        f.write("\n")
    logger.info("Wrote report %s", path)
    return path
