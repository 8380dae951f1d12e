"""
Unit tests for sweeps, minimum search and result files.
"""

import csv
import json
import math
import re

import pytest

from filterstat.config import RunConfig
from filterstat.correlations import CorrelationEngine
from filterstat.errors import ZeroIntensity
from filterstat.kernels import KernelValue
from filterstat.sweeps import (
    ORACLE_COLUMNS,
    SWEEP_COLUMNS,
    SweepRunner,
    find_minimum,
    format_float,
    run,
    write_outputs,
)

SCIENTIFIC = re.compile(r"^-?\d\.\d{11}e[+-]\d{2,3}$")


def read_csv(path):
    with open(path, encoding="utf-8", newline="") as f:
        return list(csv.reader(f))


def shifted_square(x: float) -> float:
    return (x - 1.3) ** 2 + 0.1


@pytest.fixture
def qd_chi_config():
    """Three-point chi sweep with an inner bandwidth minimization."""
    return {
        "model": {
            "kind": "qd",
            "qd": {
                "chi": 200.0,
                "gamma_sp": 0.67,
                "gamma_ph": 2.0,
                "gamma_S_e": 0.05,
                "gamma_S_h": 0.05,
                "pump_P": 0.5,
            },
        },
        "filters": [{"kind": "lorentzian", "omega_F": 0.0, "lambda": 5.0}],
        "sweep": {"axis": "chi", "grid": {"min": 150.0, "max": 250.0, "points": 3}},
        "inner_lambda": {"min": 1.0, "max": 20.0, "points": 4, "spacing": "log"},
    }


@pytest.mark.unit
class TestFindMinimum:
    """Tests for the refined grid minimum."""

    def test_symmetric_parabola(self):
        """Test the vertex of a symmetric three-point parabola."""
        x_opt, g_opt, boundary = find_minimum([1.0, 2.0, 3.0], [4.0, 1.0, 4.0])

        assert x_opt == pytest.approx(2.0)
        assert g_opt == pytest.approx(1.0)
        assert boundary is False

    def test_asymmetric_parabola(self):
        """Test the vertex lies between grid points and below the grid minimum."""
        x_opt, g_opt, boundary = find_minimum([0.0, 1.0, 2.0], [1.0, 0.5, 3.0])

        assert x_opt == pytest.approx(2.0 / 3.0)
        assert g_opt == pytest.approx(1.0 / 3.0)
        assert boundary is False

    def test_negative_vertex_keeps_grid_point(self):
        """Test a parabola extrapolated below zero falls back to the grid minimum."""
        assert find_minimum([0.0, 1.0, 2.0], [1.0, 0.0, 3.0]) == (1.0, 0.0, False)

    def test_refined_by_evaluation(self):
        """Test the bracket is searched with the supplied g2 function."""
        xs = [0.5, 1.5, 2.5]
        x_opt, g_opt, boundary = find_minimum(xs, [shifted_square(x) for x in xs], evaluate=shifted_square)

        assert x_opt == pytest.approx(1.3, abs=5e-3)
        assert g_opt == pytest.approx(0.1, abs=1e-4)
        assert boundary is False

    def test_refined_by_evaluation_on_log_axis(self):
        """Test the evaluated refinement works in log coordinates."""

        def evaluate(x):
            return (math.log(x) - math.log(3.0)) ** 2

        xs = [1.0, 2.0, 8.0]
        x_opt, g_opt, _ = find_minimum(xs, [evaluate(x) for x in xs], log_axis=True, evaluate=evaluate)

        assert x_opt == pytest.approx(3.0, rel=1e-2)
        assert g_opt == pytest.approx(0.0, abs=1e-4)

    def test_negative_evaluation_keeps_grid_point(self):
        """Test a refinement that dips below zero is discarded."""

        def evaluate(x):
            return shifted_square(x) - 0.6

        assert find_minimum([0.5, 1.5, 2.5], [1.0, 0.2, 1.0], evaluate=evaluate) == (1.5, 0.2, False)

    def test_failed_evaluation_keeps_grid_point(self):
        """Test evaluation errors inside the bracket leave the grid minimum in place."""

        def evaluate(x):
            raise ZeroIntensity(f"Filtered intensity vanishes at {x}")

        assert find_minimum([0.5, 1.5, 2.5], [1.0, 0.2, 1.0], evaluate=evaluate) == (1.5, 0.2, False)

    def test_unsorted_input(self):
        """Test points are sorted by the axis before searching."""
        assert find_minimum([3.0, 1.0, 2.0], [4.0, 4.0, 1.0])[0] == pytest.approx(2.0)

    def test_boundary_minimum(self):
        """Test a minimum at the grid edge is flagged and not refined."""
        assert find_minimum([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == (1.0, 1.0, True)
        assert find_minimum([1.0, 2.0, 3.0], [3.0, 2.0, 1.0]) == (3.0, 1.0, True)

    def test_log_axis(self):
        """Test refinement in log coordinates."""
        x_opt, g_opt, _ = find_minimum([1.0, 10.0, 100.0], [4.0, 1.0, 4.0], log_axis=True)

        assert x_opt == pytest.approx(10.0)
        assert g_opt == pytest.approx(1.0)

    def test_non_finite_values_dropped(self):
        """Test NaN entries do not count towards the three points."""
        with pytest.raises(ValueError, match="at least 3 finite points"):
            find_minimum([1.0, 2.0, 3.0], [1.0, math.nan, 2.0])


@pytest.mark.unit
class TestFormatting:
    """Tests for numeric formatting."""

    def test_twelve_significant_digits(self):
        """Test floats are written in scientific notation with 12 significant digits."""
        assert format_float(0.5) == "5.00000000000e-01"
        assert SCIENTIFIC.match(format_float(math.pi))

    def test_non_finite(self):
        """Test NaN and None are written as nan."""
        assert format_float(math.nan) == "nan"
        assert format_float(None) == "nan"


@pytest.mark.unit
class TestSweepRunner:
    """Tests for SweepRunner."""

    def test_bandwidth_sweep_rows(self, rf_run_config):
        """Test one ok row per bandwidth in configuration units."""
        config = RunConfig(**rf_run_config)
        result = SweepRunner(config).run()

        assert len(result.rows) == 5
        assert all(row.ok for row in result.rows)
        assert [row.bandwidth for row in result.rows] == pytest.approx(list(config.sweep.grid.values()))
        assert all(row.omega_F == 2.0 for row in result.rows)
        assert all(row.g2 >= 0 and math.isfinite(row.g2) for row in result.rows)
        assert len(result.minima) == 1
        assert result.minima[0].axis == "lambda"

    def test_rabi_units_are_scale_free(self, rf_run_config):
        """Test doubling every rate leaves g2 unchanged in Rabi units."""
        baseline = SweepRunner(RunConfig(**rf_run_config)).run()
        rf_run_config["model"]["rf"] = {"omega_R": 2.0, "gamma_sp": 0.6, "gamma_ph": 0.0}
        scaled = SweepRunner(RunConfig(**rf_run_config)).run()

        for a, b in zip(baseline.rows, scaled.rows):
            assert b.g2 == pytest.approx(a.g2, rel=1e-8)

    def test_spectrum_columns(self, rf_run_config):
        """Test the spectrum carries the filter power transmission."""
        header, rows = SweepRunner(RunConfig(**rf_run_config)).spectrum()

        assert header == ["omega", "intensity", "transmission_lorentzian"]
        assert len(rows) == 81
        at_center = min(rows, key=lambda row: abs(row[0] - 2.0))
        assert at_center[2] == pytest.approx(1.0)
        assert all(row[1] >= 0 for row in rows)

    def test_failed_rows_are_recorded(self, rf_run_config, mocker):
        """Test an evaluation error marks the row failed and the sweep carries on."""
        mocker.patch.object(CorrelationEngine, "g2_zero", side_effect=ZeroIntensity("Filtered intensity vanishes"))
        result = SweepRunner(RunConfig(**rf_run_config)).run()

        assert len(result.failed_rows) == 5
        assert all(row.status.startswith("failed: ") for row in result.rows)
        assert all(math.isnan(row.g2) for row in result.rows)
        assert result.minima == []

    def test_inner_minimization(self, qd_chi_config):
        """Test every chi point gets its own optimal bandwidth."""
        result = SweepRunner(RunConfig(**qd_chi_config)).run()

        assert [m.sweep_value for m in result.inner_minima] == pytest.approx([150.0, 200.0, 250.0])
        for row, minimum in zip(result.rows, result.inner_minima):
            assert minimum.axis == "lambda"
            assert 1.0 <= minimum.axis_opt <= 20.0
            assert row.bandwidth == pytest.approx(minimum.axis_opt)
            assert row.g2 == pytest.approx(minimum.g2_min)

    def test_absolute_frame(self, qd_chi_config):
        """Test absolute filter centers are measured from omega_X."""
        relative = SweepRunner(RunConfig(**qd_chi_config)).run()
        qd_chi_config["model"]["qd"]["omega_X"] = 1.3e6
        qd_chi_config["frequency_frame"] = "absolute"
        qd_chi_config["filters"][0]["omega_F"] = 1.3e6
        absolute = SweepRunner(RunConfig(**qd_chi_config)).run()

        for a, b in zip(relative.rows, absolute.rows):
            assert b.g2 == pytest.approx(a.g2, rel=1e-10)

    def test_oracle_override(self, rf_run_config):
        """Test the command-line oracle mode replaces the config flags."""
        rf_run_config["oracles"] = {"sensor": True}
        config = RunConfig(**rf_run_config)

        assert SweepRunner(config).oracle_mode == "sensor"
        assert SweepRunner(config, oracle="none").oracle_mode == "none"
        assert SweepRunner(config, oracle="kernel").oracle_mode == "kernel"
        with pytest.raises(ValueError, match="Unknown oracle mode"):
            SweepRunner(config, oracle="exact")

    def test_sensor_oracle_rows(self, rf_run_config):
        """Test the sensor oracle agrees with every Lorentzian row."""
        result = SweepRunner(RunConfig(**rf_run_config), oracle="sensor").run()

        assert len(result.oracle_rows) == 5
        for row in result.oracle_rows:
            assert row.oracle == "sensor"
            assert row.relative_difference <= 1e-3

    def test_kernel_oracle_rows(self, rf_run_config):
        """Test the time-domain kernel oracle runs for every filter shape without aborting the sweep."""
        kinds = ("lorentzian", "rectangular")
        rf_run_config["filters"] = [{"kind": kind, "omega_F": 2.0, "lambda": 0.5} for kind in kinds]
        result = SweepRunner(RunConfig(**rf_run_config), oracle="kernel").run()

        assert not result.failed_rows
        assert {row.filter_kind for row in result.oracle_rows} == {"lorentzian", "rectangular"}
        assert result.failed_oracle_rows == []
        for row in result.oracle_rows:
            assert row.oracle == "kernel"
            assert math.isfinite(row.relative_difference)
        lorentzian = [row for row in result.oracle_rows if row.filter_kind == "lorentzian"]
        assert max(row.relative_difference for row in lorentzian) <= 1e-4

    def test_kernel_oracle_failure_is_recorded(self, rf_run_config, mocker):
        """Test an oracle evaluation error becomes a failed row instead of escaping the run."""
        failure = ValueError("error_estimate must be non-negative")
        mocker.patch("filterstat.sweeps.z_kernel_numeric", side_effect=failure)
        result = SweepRunner(RunConfig(**rf_run_config), oracle="kernel").run()

        assert not result.failed_rows
        assert result.oracle_rows
        assert len(result.failed_oracle_rows) == len(result.oracle_rows)
        for row in result.oracle_rows:
            assert row.status == "failed: error_estimate must be non-negative"
            assert math.isnan(row.relative_difference)

    def test_kernel_oracle_compares_phase(self, rf_run_config, mocker):
        """Test a closed form with the right magnitude but the wrong phase is caught."""
        mocker.patch("filterstat.sweeps.z_kernel", return_value=KernelValue(0.25j))
        mocker.patch("filterstat.sweeps.z_kernel_numeric", return_value=KernelValue(-0.25j))
        result = SweepRunner(RunConfig(**rf_run_config), oracle="kernel").run()

        assert result.oracle_rows
        for row in result.oracle_rows:
            assert row.value == pytest.approx(row.reference)
            assert row.relative_difference == pytest.approx(2.0)


@pytest.mark.unit
class TestOutputs:
    """Tests for result files."""

    def test_written_files(self, rf_run_config, tmp_path):
        """Test the file set and the CSV layout."""
        config = RunConfig(**rf_run_config)
        result = SweepRunner(config).run()
        written = write_outputs(result, config, str(tmp_path))

        assert written == ["spectrum.csv", "g2_sweep.csv", "minima.json", "run_manifest.json"]
        sweep = read_csv(tmp_path / "g2_sweep.csv")
        assert tuple(sweep[0]) == SWEEP_COLUMNS
        assert len(sweep) == 6
        assert sweep[1][0] == "lambda"
        assert sweep[1][2] == "lorentzian"
        assert SCIENTIFIC.match(sweep[1][5])
        assert sweep[1][-1] == "ok"
        assert not (tmp_path / "oracle.csv").exists()

    def test_minima_file(self, rf_run_config, tmp_path):
        """Test minima.json lists one refined minimum per filter."""
        config = RunConfig(**rf_run_config)
        write_outputs(SweepRunner(config).run(), config, str(tmp_path))

        minima = json.loads((tmp_path / "minima.json").read_text(encoding="utf-8"))
        assert minima["sweep_axis"] == "lambda"
        assert "inner_minima" not in minima
        assert set(minima["minima"][0]) == {"filter_index", "filter_kind", "axis", "axis_opt", "g2_min", "boundary"}

    def test_manifest(self, rf_run_config, tmp_path):
        """Test the manifest records versions, the config and no seed."""
        config = RunConfig(**rf_run_config)
        write_outputs(SweepRunner(config).run(), config, str(tmp_path), oracle_mode="none")

        manifest = json.loads((tmp_path / "run_manifest.json").read_text(encoding="utf-8"))
        assert manifest["seed"] is None
        assert manifest["oracle"] == "none"
        assert manifest["failed_rows"] == 0
        assert manifest["failed_oracle_rows"] == 0
        assert manifest["config"]["filters"][0]["lambda"] == 0.5
        assert set(manifest["versions"]) == {"filterstat", "numpy", "scipy", "pydantic", "python"}
        assert "threads" not in manifest

    def test_oracle_file(self, rf_run_config, tmp_path):
        """Test oracle.csv is written when an oracle ran."""
        config = RunConfig(**rf_run_config)
        run(config, output_dir=str(tmp_path), oracle="sensor")

        rows = read_csv(tmp_path / "oracle.csv")
        assert tuple(rows[0]) == ORACLE_COLUMNS
        assert len(rows) == 6
        assert rows[0][-1] == "status"
        assert all(row[-1] == "ok" for row in rows[1:])
        manifest = json.loads((tmp_path / "run_manifest.json").read_text(encoding="utf-8"))
        assert manifest["oracle"] == "sensor"
        assert "oracle.csv" in manifest["outputs"]

    def test_identical_across_thread_counts(self, qd_chi_config, tmp_path):
        """Test the written files do not depend on the thread count."""
        config = RunConfig(**qd_chi_config)
        run(config, output_dir=str(tmp_path / "one"), threads=1)
        run(config, output_dir=str(tmp_path / "two"), threads=2)

        for name in ("g2_sweep.csv", "minima.json", "run_manifest.json", "spectrum.csv"):
            assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()
