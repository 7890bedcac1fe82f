"""
Tests for the sweep CSV, Touchstone and JSON report writers.
"""

import csv
import json
import math

import numpy as np
import pytest
import skrf as rf

from Waveguide_Post_Solver.data_model import ScatteringMatrix, SweepPoint, SweepTable
from Waveguide_Post_Solver.errors import InvalidInput
from Waveguide_Post_Solver.output import (
    csv_columns,
    to_skrf_network,
    write_csv,
    write_json_report,
    write_touchstone,
)


def _point(f, s11, s21):
    S = np.array([[s11, s21], [s21, s11]], dtype=complex)
    return SweepPoint(f, ScatteringMatrix(S, frequency=f, n_propagating=1, frame="global"))


@pytest.fixture
def table():
    return SweepTable(
        [
            _point(12e9, 0.6j, 0.8),
            SweepPoint(13e9, status="cutoff", message="TE20 at cutoff"),
            _point(14e9, -0.1, 0.99j),
        ]
    )


class TestCsv:
    def test_column_order_is_canonical(self):
        assert csv_columns(["S21", "S11"]) == [
            "f_Hz",
            "S11_re",
            "S11_im",
            "S11_dB",
            "S11_deg",
            "S21_re",
            "S21_im",
            "S21_dB",
            "S21_deg",
            "status",
        ]

    def test_unknown_parameter(self):
        with pytest.raises(InvalidInput):
            csv_columns(["S33"])

    def test_rows(self, tmp_path, table):
        path = write_csv(table, tmp_path / "out" / "sweep.csv", ["S11", "S21"])
        with open(path, newline="") as f:
            rows = list(csv.DictReader(f))

        assert [row["status"] for row in rows] == ["ok", "cutoff", "ok"]
        first = rows[0]
        assert float(first["f_Hz"]) == 12e9
        assert float(first["S11_im"]) == pytest.approx(0.6)
        assert float(first["S11_deg"]) == pytest.approx(90.0)
        assert float(first["S21_dB"]) == pytest.approx(20 * math.log10(0.8))
        assert all(math.isnan(float(rows[1][key])) for key in rows[1] if key.startswith("S"))

    def test_rewrite_is_byte_identical(self, tmp_path, table):
        first = write_csv(table, tmp_path / "a.csv", ["S11", "S21", "S22"]).read_bytes()
        second = write_csv(table, tmp_path / "b.csv", ["S11", "S21", "S22"]).read_bytes()
        assert first == second
        assert b"\r\n" not in first


class TestTouchstone:
    def test_network_skips_failed_points(self, table):
        network = to_skrf_network(table)
        assert list(network.f) == [12e9, 14e9]
        assert network.s[0, 0, 0] == pytest.approx(0.6j)
        assert network.s[1, 1, 0] == pytest.approx(0.99j)

    def test_write_and_read_back(self, tmp_path, table):
        path = write_touchstone(table, tmp_path / "result")
        assert path.suffix == ".s2p"
        assert path.exists()
        network = rf.Network(str(path))
        assert network.nports == 2
        np.testing.assert_allclose(network.f, [12e9, 14e9])
        np.testing.assert_allclose(network.s[:, 1, 0], [0.8, 0.99j], atol=1e-9)

    def test_nothing_to_export(self):
        failed = SweepTable([SweepPoint(12e9, status="error", message="rank deficient")])
        with pytest.raises(InvalidInput):
            to_skrf_network(failed)


def test_json_report(tmp_path):
    path = write_json_report({"passed": True, "rows": []}, tmp_path / "r" / "report.json")
    assert json.loads(path.read_text()) == {"passed": True, "rows": []}
    assert path.read_text().endswith("\n")
