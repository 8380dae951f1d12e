"""
Parameter sweeps over a run configuration.

One sweep point fixes the emitter (its value may change chi or the Rabi frequency) and evaluates every
configured filter at it. Points are independent and run on a thread pool; results are collated by
index so the written files do not depend on the thread count.
"""

import csv
import json
import logging
import math
import os
import platform
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pydantic
import scipy
from scipy import optimize

from filterstat.__version__ import __version__
from filterstat.config import FilterKind, FilterSpec, Grid, RunConfig, SpectrumSpec
from filterstat.correlations import CorrelationEngine, G2Result, extrapolate_to_zero_pump, pump_engines
from filterstat.emitters import neutral_qd, resonance_fluorescence
from filterstat.errors import FilterstatError
from filterstat.kernels import REGIONS, filter_frequency_response, z_kernel, z_kernel_numeric, z_kernel_rect_line
from filterstat.logging_config import debug_enabled
from filterstat.sensor import g2_sensor_oracle

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = (
    "sweep_axis",
    "sweep_value",
    "filter_kind",
    "omega_F",
    "lambda",
    "g2",
    "intensity",
    "imag_residual",
    "kernel_error",
    "status",
)
ORACLE_COLUMNS = (
    "oracle",
    "sweep_value",
    "filter_kind",
    "omega_F",
    "lambda",
    "detail",
    "value",
    "reference",
    "relative_difference",
    "status",
)
ORACLE_MODES = ("sensor", "kernel", "none")
KERNEL_ORACLE_TRIPLES = 3
RECT_CHECK_TOL = 1e-6
# bracket refinement: tolerance as a fraction of the bracket width, iteration cap
REFINE_XATOL = 1e-3
REFINE_MAXITER = 25


def format_float(value: float) -> str:
    """Scientific notation with 12 significant digits."""
    if value is None or not math.isfinite(value):
        return "nan"
    return f"{value:.11e}"


def _round(value: float) -> Optional[float]:
    if value is None or not math.isfinite(value):
        return None
    return float(format_float(value))


# ==============================================================================
# Result types
# ==============================================================================


@dataclass
class SweepRow:
    sweep_axis: str
    sweep_value: float
    filter_index: int
    filter_kind: str
    omega_F: float
    bandwidth: float
    g2: float = math.nan
    intensity: float = math.nan
    imag_residual: float = math.nan
    kernel_error: float = math.nan
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def csv_fields(self) -> List[str]:
        return [
            self.sweep_axis,
            format_float(self.sweep_value),
            self.filter_kind,
            format_float(self.omega_F),
            format_float(self.bandwidth),
            format_float(self.g2),
            format_float(self.intensity),
            format_float(self.imag_residual),
            format_float(self.kernel_error),
            self.status,
        ]


@dataclass
class Minimum:
    """Refined minimum of g2 along one axis for one filter."""

    filter_index: int
    filter_kind: str
    axis: str
    axis_opt: float
    g2_min: float
    boundary: bool
    sweep_value: Optional[float] = None

    def to_dict(self) -> Dict:
        data = {
            "filter_index": self.filter_index,
            "filter_kind": self.filter_kind,
            "axis": self.axis,
            "axis_opt": _round(self.axis_opt),
            "g2_min": _round(self.g2_min),
            "boundary": self.boundary,
        }
        if self.sweep_value is not None:
            data["sweep_value"] = _round(self.sweep_value)
        return data


@dataclass
class OracleRow:
    """
    One oracle comparison. value and reference are the reported magnitudes; difference, when set, is the
    relative difference of the underlying complex numbers and takes precedence over the magnitudes.
    """

    oracle: str
    sweep_value: float
    filter_kind: str
    omega_F: float
    bandwidth: float
    detail: str
    value: float = math.nan
    reference: float = math.nan
    difference: Optional[float] = None
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def relative_difference(self) -> float:
        if not self.ok:
            return math.nan
        if self.difference is not None:
            return self.difference
        return abs(self.value - self.reference) / max(abs(self.reference), 1e-300)

    def csv_fields(self) -> List[str]:
        return [
            self.oracle,
            format_float(self.sweep_value),
            self.filter_kind,
            format_float(self.omega_F),
            format_float(self.bandwidth),
            self.detail,
            format_float(self.value),
            format_float(self.reference),
            format_float(self.relative_difference),
            self.status,
        ]


@dataclass
class SweepResult:
    rows: List[SweepRow]
    minima: List[Minimum]
    inner_minima: List[Minimum] = field(default_factory=list)
    oracle_rows: List[OracleRow] = field(default_factory=list)
    spectrum_header: List[str] = field(default_factory=list)
    spectrum_rows: List[List[float]] = field(default_factory=list)

    @property
    def failed_rows(self) -> List[SweepRow]:
        return [row for row in self.rows if not row.ok]

    @property
    def failed_oracle_rows(self) -> List[OracleRow]:
        return [row for row in self.oracle_rows if not row.ok]


# ==============================================================================
# Minimum search
# ==============================================================================


def _bounded_refinement(
    evaluate: Callable[[float], float], u0: float, u2: float, log_axis: bool, penalty: float
) -> Tuple[float, float]:
    """Bounded Brent search for the smallest g2 on [u0, u2]; failed or non-finite evaluations cost penalty."""

    def objective(u: float) -> float:
        x = math.exp(u) if log_axis else u
        try:
            value = float(evaluate(x))
        except FilterstatError as e:
            logger.debug(f"Refinement evaluation at {x:.6g} failed: {e}")
            return penalty
        return value if math.isfinite(value) else penalty

    result = optimize.minimize_scalar(
        objective,
        bounds=(u0, u2),
        method="bounded",
        options={"xatol": REFINE_XATOL * (u2 - u0), "maxiter": REFINE_MAXITER},
    )
    return float(result.x), float(result.fun)


def find_minimum(
    axis_values: Sequence[float],
    g2_values: Sequence[float],
    log_axis: bool = False,
    evaluate: Optional[Callable[[float], float]] = None,
):
    """
    Grid minimum refined inside the bracket formed by its two neighbours.

    With evaluate, g2 is minimized on the bracket directly; the refined point replaces the grid point
    only if it is lower. Without it, the parabola through the three points gives the vertex, and a
    vertex value below zero falls back to the grid point. Coordinates are log(axis) when log_axis is
    set. A minimum on the grid boundary is returned as is.

    Returns:
        (axis_opt, g2_min, boundary)
    """
    points = sorted((float(x), float(g)) for x, g in zip(axis_values, g2_values) if math.isfinite(g))
    if len(points) < 3:
        raise ValueError(f"find_minimum needs at least 3 finite points, got {len(points)}")

    xs = np.array([p[0] for p in points])
    gs = np.array([p[1] for p in points])
    best = int(np.argmin(gs))
    if best == 0 or best == len(points) - 1:
        return float(xs[best]), float(gs[best]), True

    us = np.log(xs[best - 1 : best + 2]) if log_axis else xs[best - 1 : best + 2]
    u0, u1, u2 = (float(u) for u in us)
    g0, g1, g2 = gs[best - 1 : best + 2]

    if evaluate is not None:
        u_opt, g_opt = _bounded_refinement(evaluate, u0, u2, log_axis, penalty=float(gs.max()) + 1.0)
        if not 0.0 <= g_opt < g1:
            return float(xs[best]), float(g1), False
        return (math.exp(u_opt) if log_axis else u_opt), g_opt, False

    denominator = (u1 - u0) * (g1 - g2) - (u1 - u2) * (g1 - g0)
    if denominator == 0:
        return float(xs[best]), float(g1), False
    numerator = (u1 - u0) ** 2 * (g1 - g2) - (u1 - u2) ** 2 * (g1 - g0)
    u_opt = float(np.clip(u1 - 0.5 * numerator / denominator, u0, u2))

    # parabola value at the vertex, never above the grid minimum
    coefficients = np.polyfit(us, [g0, g1, g2], 2)
    g_vertex = float(np.polyval(coefficients, u_opt))
    if g_vertex < 0.0:
        logger.debug(f"Parabola vertex {g_vertex:.3e} below zero; keeping the grid minimum")
        return float(xs[best]), float(g1), False
    x_opt = math.exp(u_opt) if log_axis else u_opt
    return x_opt, min(g_vertex, float(g1)), False


# ==============================================================================
# Runner
# ==============================================================================


@dataclass
class _Point:
    """Engines of one sweep point; pump is None unless the QD result is extrapolated to P -> 0."""

    value: float
    unit: float
    engines: List[Tuple[Optional[float], CorrelationEngine]]

    def g2(self, filter: FilterSpec) -> G2Result:
        if len(self.engines) == 1 and self.engines[0][0] is None:
            return self.engines[0][1].g2_zero(filter)
        return extrapolate_to_zero_pump(
            [pump for pump, _ in self.engines], [engine.g2_zero(filter) for _, engine in self.engines]
        )


class SweepRunner:
    """Evaluate a RunConfig: sweep rows, minima, oracles and the emission spectrum."""

    def __init__(self, config: RunConfig, threads: Optional[int] = None, oracle: Optional[str] = None):
        if oracle is not None and oracle not in ORACLE_MODES:
            raise ValueError(f"Unknown oracle mode '{oracle}'. Expected one of: {', '.join(ORACLE_MODES)}")
        self.config = config
        self.threads = threads or config.threads
        self.axis = config.sweep.axis
        self.values = [float(v) for v in config.sweep.grid.values()]
        if oracle is None:
            self.sensor_oracle = config.oracles.sensor
            self.kernel_oracle = config.oracles.kernel_numeric
        else:
            self.sensor_oracle = oracle == "sensor"
            self.kernel_oracle = oracle == "kernel"
        self._shared_point: Optional[_Point] = None

    @property
    def oracle_mode(self) -> str:
        if self.sensor_oracle and self.kernel_oracle:
            return "sensor+kernel"
        if self.sensor_oracle:
            return "sensor"
        return "kernel" if self.kernel_oracle else "none"

    # ------------------------------------------------------------------------------
    # Models and filters
    # ------------------------------------------------------------------------------

    def _build_point(self, value: float) -> _Point:
        model_config = self.config.model
        tolerances = self.config.tolerances
        if model_config.kind == "rf":
            params = model_config.rf
            if self.axis == "rabi_ratio":
                params = params.model_copy(update={"omega_R": value * params.gamma_sp / 2.0})
            unit = params.omega_R if self.config.rabi_units else 1.0
            return _Point(value, unit, [(None, CorrelationEngine(resonance_fluorescence(params), tolerances))])

        params = model_config.qd
        if self.axis == "chi":
            params = params.model_copy(update={"chi": value})
        if model_config.pump_factors:
            return _Point(value, 1.0, pump_engines(params, model_config.pump_factors, tolerances))
        return _Point(value, 1.0, [(None, CorrelationEngine(neutral_qd(params), tolerances))])

    def _point(self, value: float) -> _Point:
        if self.axis in ("lambda", "omega_F"):
            if self._shared_point is None:
                self._shared_point = self._build_point(value)
            return _Point(value, self._shared_point.unit, self._shared_point.engines)
        return self._build_point(value)

    def _user_filter(self, template: FilterSpec, value: float, bandwidth: Optional[float] = None) -> FilterSpec:
        """Filter in configuration units at one sweep value."""
        omega_F = value if self.axis == "omega_F" else template.omega_F
        lam = value if self.axis == "lambda" else template.bandwidth
        if bandwidth is not None:
            lam = bandwidth
        return template.with_values(omega_F=omega_F, bandwidth=lam)

    def _internal_filter(self, user_filter: FilterSpec, unit: float) -> FilterSpec:
        """Filter in model energy units, centered relative to the emitter line."""
        omega_F = user_filter.omega_F * unit
        if self.config.frequency_frame == "absolute" and self.config.model.kind == "qd":
            omega_F -= self.config.model.qd.omega_X
        return user_filter.with_values(omega_F=omega_F, bandwidth=user_filter.bandwidth * unit)

    # ------------------------------------------------------------------------------
    # Rows
    # ------------------------------------------------------------------------------

    def _failed_row(self, value: float, index: int, user_filter: FilterSpec, error: Exception) -> SweepRow:
        logger.warning(f"{self.axis}={value:.6g}, filter {index} ({user_filter.kind.value}) failed: {error}")
        return SweepRow(
            sweep_axis=self.axis,
            sweep_value=value,
            filter_index=index,
            filter_kind=user_filter.kind.value,
            omega_F=user_filter.omega_F,
            bandwidth=user_filter.bandwidth,
            status=f"failed: {error}",
        )

    def _row(self, point: _Point, index: int, user_filter: FilterSpec, result: G2Result) -> SweepRow:
        return SweepRow(
            sweep_axis=self.axis,
            sweep_value=point.value,
            filter_index=index,
            filter_kind=user_filter.kind.value,
            omega_F=user_filter.omega_F,
            bandwidth=user_filter.bandwidth,
            g2=result.g2,
            intensity=result.intensity,
            imag_residual=result.imag_residual,
            kernel_error=result.kernel_error,
        )

    def _inner_minimum(self, point: _Point, index: int, template: FilterSpec) -> Tuple[SweepRow, Optional[Minimum]]:
        inner: Grid = self.config.inner_lambda
        evaluated: Dict[float, G2Result] = {}
        errors = []

        def evaluate(lam: float) -> float:
            user_filter = self._user_filter(template, point.value, bandwidth=lam)
            evaluated[lam] = point.g2(self._internal_filter(user_filter, point.unit))
            return evaluated[lam].g2

        for lam in inner.values():
            try:
                evaluate(float(lam))
            except FilterstatError as e:
                errors.append(e)
        if len(evaluated) < 3:
            error = errors[-1] if errors else FilterstatError("fewer than 3 inner bandwidths evaluated")
            return self._failed_row(point.value, index, self._user_filter(template, point.value), error), None

        grid = sorted(evaluated.items())
        lam_opt, g2_min, boundary = find_minimum(
            [lam for lam, _ in grid], [r.g2 for _, r in grid], log_axis=inner.spacing == "log", evaluate=evaluate
        )
        nearest = min(evaluated.items(), key=lambda item: abs(item[0] - lam_opt))[1]
        user_filter = self._user_filter(template, point.value, bandwidth=lam_opt)
        row = self._row(point, index, user_filter, nearest)
        row.g2 = g2_min
        minimum = Minimum(index, template.kind.value, "lambda", lam_opt, g2_min, boundary, sweep_value=point.value)
        return row, minimum

    def _evaluate_point(self, value: float) -> Tuple[List[SweepRow], List[Minimum]]:
        rows: List[SweepRow] = []
        minima: List[Minimum] = []
        try:
            point = self._point(value)
        except FilterstatError as e:
            for index, template in enumerate(self.config.filters):
                rows.append(self._failed_row(value, index, self._user_filter(template, value), e))
            return rows, minima

        for index, template in enumerate(self.config.filters):
            if self.config.inner_lambda is not None:
                row, minimum = self._inner_minimum(point, index, template)
                rows.append(row)
                if minimum is not None:
                    minima.append(minimum)
                continue
            user_filter = self._user_filter(template, value)
            try:
                result = point.g2(self._internal_filter(user_filter, point.unit))
            except FilterstatError as e:
                rows.append(self._failed_row(value, index, user_filter, e))
                continue
            rows.append(self._row(point, index, user_filter, result))
        logger.debug(f"Evaluated {self.axis}={value:.6g}")
        return rows, minima

    def _axis_minima(self, rows: List[SweepRow]) -> List[Minimum]:
        minima = []
        log_axis = self.config.sweep.grid.spacing == "log"
        for index, template in enumerate(self.config.filters):
            ok_rows = [row for row in rows if row.filter_index == index and row.ok]
            if len(ok_rows) < 3:
                logger.warning(f"Filter {index} ({template.kind.value}): too few successful rows for a minimum")
                continue
            axis_opt, g2_min, boundary = find_minimum(
                [row.sweep_value for row in ok_rows],
                [row.g2 for row in ok_rows],
                log_axis=log_axis,
                evaluate=self._bandwidth_objective(template) if self.axis == "lambda" else None,
            )
            minima.append(Minimum(index, template.kind.value, self.axis, axis_opt, g2_min, boundary))
        return minima

    def _bandwidth_objective(self, template: FilterSpec) -> Callable[[float], float]:
        """g2 as a function of the bandwidth on the shared sweep point."""
        point = self._point(self.values[0])

        def evaluate(lam: float) -> float:
            return point.g2(self._internal_filter(self._user_filter(template, lam), point.unit)).g2

        return evaluate

    # ------------------------------------------------------------------------------
    # Oracles and checks
    # ------------------------------------------------------------------------------

    def _largest_triples(self, engine: CorrelationEngine, region: str) -> List[Tuple[int, int, int]]:
        indices, entries = engine.pruned_entries(region)
        order = np.argsort(-np.abs(entries), kind="stable")[:KERNEL_ORACLE_TRIPLES]
        return [tuple(int(j) for j in indices[k]) for k in order]

    def _rectangular_check(self, point: _Point) -> None:
        """Closed-form rectangular kernels against the line-integral form on the first sweep point."""
        engine = point.engines[0][1]
        for template in self.config.filters:
            if template.kind != FilterKind.RECTANGULAR:
                continue
            internal = self._internal_filter(self._user_filter(template, point.value), point.unit)
            for region in REGIONS:
                for triple in self._largest_triples(engine, region):
                    omegas = [engine.omegas[j] for j in triple]
                    closed = engine.kernel(internal, region, triple).value
                    line = z_kernel_rect_line(
                        internal, region, omegas, engine.tolerances.quadrature, engine.tolerances.eps_branch
                    ).value
                    difference = abs(closed - line) / max(abs(line), 1e-300)
                    message = f"Rectangular Z_{region}{triple}: closed {closed:.8g}, line {line:.8g}"
                    if difference > RECT_CHECK_TOL:
                        logger.warning(f"{message} differ by {difference:.2e}")
                    else:
                        logger.debug(message)

    def _kernel_oracle_row(
        self, point: _Point, user_filter: FilterSpec, region: str, triple: Tuple[int, int, int]
    ) -> OracleRow:
        """Closed-form Z against the time-domain integral for one triple, compared as complex numbers."""
        engine = point.engines[0][1]
        internal = self._internal_filter(user_filter, point.unit)
        omegas = [engine.omegas[j] for j in triple]
        row = OracleRow(
            oracle="kernel",
            sweep_value=point.value,
            filter_kind=user_filter.kind.value,
            omega_F=user_filter.omega_F,
            bandwidth=user_filter.bandwidth,
            detail=f"Z_{region}[{triple[0]};{triple[1]};{triple[2]}] abs",
        )
        try:
            closed = z_kernel(internal, region, omegas, engine.tolerances.quadrature, engine.tolerances.eps_branch)
            numeric = z_kernel_numeric(internal, region, omegas, engine.tolerances.quadrature)
        except (FilterstatError, ValueError, ArithmeticError) as e:
            logger.warning(f"Kernel oracle failed for Z_{region}{triple} ({user_filter.kind.value}): {e}")
            row.status = f"failed: {e}"
            return row

        row.value = abs(closed.value)
        row.reference = abs(numeric.value)
        row.difference = abs(closed.value - numeric.value) / max(abs(numeric.value), 1e-300)
        return row

    def _kernel_oracle_rows(self, point: _Point) -> List[OracleRow]:
        engine = point.engines[0][1]
        rows = []
        for template in self.config.filters:
            user_filter = self._user_filter(template, point.value)
            for region in REGIONS:
                for triple in self._largest_triples(engine, region):
                    rows.append(self._kernel_oracle_row(point, user_filter, region, triple))
        return rows

    def _sensor_oracle_rows(self, rows: List[SweepRow]) -> List[OracleRow]:
        oracle_rows = []
        for row in rows:
            if not row.ok or row.filter_kind != FilterKind.LORENTZIAN.value:
                continue
            point = self._point(row.sweep_value)
            engine = point.engines[0][1]
            user_filter = FilterSpec(kind=FilterKind.LORENTZIAN, omega_F=row.omega_F, bandwidth=row.bandwidth)
            internal = self._internal_filter(user_filter, point.unit)
            oracle_row = OracleRow(
                oracle="sensor",
                sweep_value=row.sweep_value,
                filter_kind=row.filter_kind,
                omega_F=row.omega_F,
                bandwidth=row.bandwidth,
                detail="g2",
            )
            try:
                oracle_row.value = engine.g2_zero(internal).g2
                oracle_row.reference = g2_sensor_oracle(
                    engine.model, internal.omega_F, internal.bandwidth, self.config.oracles.sensor_epsilon
                )
            except (FilterstatError, ValueError, ArithmeticError) as e:
                logger.warning(f"Sensor oracle failed at {self.axis}={row.sweep_value:.6g}: {e}")
                oracle_row.status = f"failed: {e}"
            oracle_rows.append(oracle_row)
        return oracle_rows

    # ------------------------------------------------------------------------------
    # Spectrum
    # ------------------------------------------------------------------------------

    def _default_spectrum(self, engine: CorrelationEngine) -> SpectrumSpec:
        top_rate = max(channel.rate for channel in engine.model.channels) or 1.0
        span = 1.25 * float(np.max(np.abs(engine.omegas.imag))) + 10.0 * top_rate
        return SpectrumSpec(min=-span, max=span, probe_lambda=0.05 * top_rate)

    def spectrum(self) -> Tuple[List[str], List[List[float]]]:
        """Emission spectrum of the first sweep point plus the power transmission of every filter."""
        point = self._point(self.values[0])
        engine = point.engines[0][1]
        spec = self.config.spectrum or self._default_spectrum(engine)
        grid = spec.values()
        intensities = engine.emission_spectrum(grid, spec.probe_lambda)

        header = ["omega", "intensity"]
        columns = []
        kinds = [template.kind.value for template in self.config.filters]
        for index, template in enumerate(self.config.filters):
            internal = self._internal_filter(self._user_filter(template, point.value), point.unit)
            name = f"transmission_{template.kind.value}"
            header.append(name if kinds.count(template.kind.value) == 1 else f"{name}_{index}")
            columns.append(np.abs(2.0 * math.pi * filter_frequency_response(internal, grid)) ** 2)
        rows = [[omega, intensity] + [float(c[k]) for c in columns] for k, (omega, intensity) in enumerate(intensities)]
        logger.info(f"Emission spectrum on {len(rows)} points, probe lambda {spec.probe_lambda:.4g}")
        return header, rows

    # ------------------------------------------------------------------------------
    # Entry point
    # ------------------------------------------------------------------------------

    def run(self) -> SweepResult:
        logger.info(f"Sweep over {self.axis}: {len(self.values)} points x {len(self.config.filters)} filters")
        if self.axis in ("lambda", "omega_F"):
            # build the shared engines before the pool starts
            self._point(self.values[0])

        if self.threads > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                evaluated = list(pool.map(self._evaluate_point, self.values))
        else:
            evaluated = [self._evaluate_point(value) for value in self.values]

        rows = [row for point_rows, _ in evaluated for row in point_rows]
        inner_minima = [minimum for _, point_minima in evaluated for minimum in point_minima]
        result = SweepResult(rows=rows, minima=self._axis_minima(rows), inner_minima=inner_minima)

        first = None
        if debug_enabled() or self.kernel_oracle:
            try:
                first = self._point(self.values[0])
            except FilterstatError as e:
                logger.warning(f"Skipping kernel checks, first sweep point failed: {e}")
        if first is not None and debug_enabled():
            self._rectangular_check(first)
        if first is not None and self.kernel_oracle:
            result.oracle_rows.extend(self._kernel_oracle_rows(first))
        if self.sensor_oracle:
            result.oracle_rows.extend(self._sensor_oracle_rows(rows))

        try:
            result.spectrum_header, result.spectrum_rows = self.spectrum()
        except FilterstatError as e:
            logger.warning(f"Emission spectrum failed: {e}")

        logger.info(f"Sweep finished: {len(rows) - len(result.failed_rows)}/{len(rows)} rows ok")
        return result


# ==============================================================================
# Output files
# ==============================================================================


def _write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence[str]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_spectrum(output_dir: str, header: Sequence[str], rows: Sequence[Sequence[float]]) -> str:
    os.makedirs(output_dir, exist_ok=True)
    path = os.path.join(output_dir, "spectrum.csv")
    _write_csv(path, header, [[format_float(x) for x in row] for row in rows])
    return path


def build_manifest(
    config: RunConfig, oracle_mode: str, outputs: Sequence[str], failed_rows: int, failed_oracle_rows: int = 0
) -> Dict:
    return {
        "filterstat": __version__,
        "config": config.model_dump(mode="json", by_alias=True),
        "versions": {
            "filterstat": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "pydantic": pydantic.VERSION,
            "python": platform.python_version(),
        },
        "oracle": oracle_mode,
        "seed": None,
        "outputs": list(outputs),
        "failed_rows": failed_rows,
        "failed_oracle_rows": failed_oracle_rows,
    }


def write_outputs(result: SweepResult, config: RunConfig, output_dir: str, oracle_mode: str = "none") -> List[str]:
    """
    Write spectrum.csv, g2_sweep.csv, minima.json, oracle.csv (when oracles ran) and run_manifest.json.

    Returns:
        Written file names
    """
    os.makedirs(output_dir, exist_ok=True)
    written = []

    if result.spectrum_rows:
        write_spectrum(output_dir, result.spectrum_header, result.spectrum_rows)
        written.append("spectrum.csv")

    _write_csv(os.path.join(output_dir, "g2_sweep.csv"), SWEEP_COLUMNS, [row.csv_fields() for row in result.rows])
    written.append("g2_sweep.csv")

    minima = {
        "sweep_axis": config.sweep.axis,
        "minima": [m.to_dict() for m in result.minima],
    }
    if config.inner_lambda is not None:
        minima["inner_minima"] = [m.to_dict() for m in result.inner_minima]
    with open(os.path.join(output_dir, "minima.json"), "w", encoding="utf-8") as f:
        json.dump(minima, f, indent=2)
        f.write("\n")
    written.append("minima.json")

    if result.oracle_rows:
        _write_csv(
            os.path.join(output_dir, "oracle.csv"), ORACLE_COLUMNS, [row.csv_fields() for row in result.oracle_rows]
        )
        written.append("oracle.csv")

    manifest = build_manifest(
        config, oracle_mode, written + ["run_manifest.json"], len(result.failed_rows), len(result.failed_oracle_rows)
    )
    with open(os.path.join(output_dir, "run_manifest.json"), "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")
    written.append("run_manifest.json")

    logger.info(f"Wrote {', '.join(written)} to {output_dir}")
    return written


def run(
    config: RunConfig,
    output_dir: Optional[str] = None,
    threads: Optional[int] = None,
    oracle: Optional[str] = None,
) -> SweepResult:
    """Run a configuration and write its result files."""
    runner = SweepRunner(config, threads=threads, oracle=oracle)
    result = runner.run()
    write_outputs(result, config, output_dir or config.output, runner.oracle_mode)
    return result
