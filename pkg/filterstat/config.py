"""
Configuration models for filterstat runs.

A run configuration is a single JSON document; see schemas/run_config_schema.json for the key schema.
"""

import json
import logging
import os
from enum import Enum
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from filterstat.errors import ConfigError
from filterstat.units import unit_convert

logger = logging.getLogger(__name__)


class Quadrature(BaseModel):
    """Adaptive quadrature tolerances."""

    model_config = ConfigDict(frozen=True)

    rel_tol: float = Field(default=1e-10, gt=0)
    abs_tol: float = Field(default=1e-14, gt=0)
    max_subdivisions: int = Field(default=2000, ge=50)


class Tolerances(BaseModel):
    """Numerical constants; every field can be overridden from the config file."""

    model_config = ConfigDict(frozen=True)

    atol_herm: float = 1e-10  # hermiticity check, relative to the model rate scale
    ztol: float = 1e-9  # zero eigenvalue, relative to max|Omega|
    cond_max: float = 1e10  # eigenvector basis condition number
    eps_branch: float = 1e-12  # materialized +i0 offsets of the rectangular kernels
    theta_prune: float = 1e-14  # relative threshold for trace-tensor entries
    imag_residual_max: float = 1e-6
    quadrature: Quadrature = Field(default_factory=Quadrature)


class FilterKind(str, Enum):
    LORENTZIAN = "lorentzian"
    GAUSSIAN = "gaussian"
    RECTANGULAR = "rectangular"


class FilterSpec(BaseModel):
    """Spectral filter: shape, center frequency omega_F and bandwidth lambda (JSON key "lambda")."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    kind: FilterKind
    omega_F: float = 0.0
    bandwidth: float = Field(alias="lambda", gt=0)

    def with_values(self, omega_F: Optional[float] = None, bandwidth: Optional[float] = None) -> "FilterSpec":
        """Copy with a new center and/or bandwidth."""
        return FilterSpec(
            kind=self.kind,
            omega_F=self.omega_F if omega_F is None else omega_F,
            bandwidth=self.bandwidth if bandwidth is None else bandwidth,
        )


class RFParams(BaseModel):
    """Resonantly driven two-level emitter (energies in ueV, or in any consistent unit)."""

    omega_R: float = Field(default=1.0, ge=0)
    gamma_sp: float = Field(default=0.3, ge=0)
    gamma_ph: float = Field(default=0.0, ge=0)


class QDParams(BaseModel):
    """Neutral quantum dot with six configurations (energies in ueV)."""

    chi: float = Field(default=2000.0, ge=0)  # biexciton binding energy
    gamma_sp: float = Field(default=0.67, ge=0)
    gamma_ph: float = Field(default=20.0, ge=0)
    gamma_S_e: float = Field(default=0.5 * unit_convert(10.0, "ns", "ueV"), ge=0)
    gamma_S_h: float = Field(default=0.5 * unit_convert(10.0, "ns", "ueV"), ge=0)
    pump_P: float = Field(default=6.7e-4, ge=0)
    omega_X: float = 0.0  # absolute exciton energy, used only to normalize absolute filter centers

    @property
    def gamma_S(self) -> float:
        return self.gamma_S_e + self.gamma_S_h

    @classmethod
    def from_lifetimes(
        cls,
        tau_S_ns: float,
        electron_fraction: float = 0.5,
        **kwargs,
    ) -> "QDParams":
        """Build parameters from the spin-flip time tau_S = 1/gamma_S (ns), split between electron and hole."""
        if not 0.0 <= electron_fraction <= 1.0:
            raise ValueError(f"electron_fraction must lie in [0, 1], got {electron_fraction}")
        gamma_S = unit_convert(tau_S_ns, "ns", "ueV")
        return cls(gamma_S_e=electron_fraction * gamma_S, gamma_S_h=(1.0 - electron_fraction) * gamma_S, **kwargs)


class ModelConfig(BaseModel):
    """Emitter selection."""

    kind: Literal["rf", "qd"] = "rf"
    rf: RFParams = Field(default_factory=RFParams)
    qd: QDParams = Field(default_factory=QDParams)

    # P -> 0 extrapolation factors (pump P = factor * gamma_sp), QD only
    pump_factors: Optional[List[float]] = None

    @model_validator(mode="after")
    def validate_pump_factors(self) -> "ModelConfig":
        """Pump extrapolation needs the QD model and at least two positive factors."""
        if self.pump_factors is not None:
            if self.kind != "qd":
                raise ValueError("pump_factors is only meaningful for model.kind = 'qd'")
            if len(self.pump_factors) < 2 or any(f <= 0 for f in self.pump_factors):
                raise ValueError(f"pump_factors needs at least two positive values, got {self.pump_factors}")
        return self


class Grid(BaseModel):
    """One-dimensional sweep grid."""

    min: float
    max: float
    points: int = Field(ge=2)
    spacing: Literal["linear", "log"] = "linear"
    # pinned values merged into the spaced grid
    extra: List[float] = Field(default_factory=list)

    @model_validator(mode="after")
    def validate_range(self) -> "Grid":
        """min < max, log spacing requires min > 0, and extra values lie inside [min, max]."""
        if not self.min < self.max:
            raise ValueError(f"Grid min ({self.min}) must be smaller than max ({self.max})")
        if self.spacing == "log" and self.min <= 0:
            raise ValueError(f"Log-spaced grid requires min > 0, got {self.min}")
        outside = [v for v in self.extra if not self.min <= v <= self.max]
        if outside:
            raise ValueError(f"Grid extra values {outside} lie outside [{self.min}, {self.max}]")
        return self

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            spaced = np.geomspace(self.min, self.max, self.points)
        else:
            spaced = np.linspace(self.min, self.max, self.points)
        if not self.extra:
            return spaced
        return np.union1d(spaced, np.asarray(self.extra, dtype=float))


class SweepSpec(BaseModel):
    axis: Literal["lambda", "chi", "rabi_ratio", "omega_F"] = "lambda"
    grid: Grid


class SpectrumSpec(BaseModel):
    """Emission spectrum grid (frequencies relative to omega_X) and Lorentzian probe width."""

    min: float
    max: float
    points: int = Field(default=801, ge=3)
    probe_lambda: float = Field(gt=0)

    @model_validator(mode="after")
    def validate_range(self) -> "SpectrumSpec":
        if not self.min < self.max:
            raise ValueError(f"Spectrum min ({self.min}) must be smaller than max ({self.max})")
        return self

    def values(self) -> np.ndarray:
        return np.linspace(self.min, self.max, self.points)


class OracleFlags(BaseModel):
    sensor: bool = False
    kernel_numeric: bool = False
    sensor_epsilon: Optional[float] = Field(default=None, gt=0)  # default: 1e-3 * smallest nonzero rate


class RunConfig(BaseModel):
    """Complete description of one filterstat run."""

    model: ModelConfig = Field(default_factory=ModelConfig)
    filters: List[FilterSpec] = Field(default_factory=list)
    sweep: SweepSpec

    # optional inner bandwidth minimization for chi / rabi_ratio / omega_F sweeps
    inner_lambda: Optional[Grid] = None

    # RF model: lambda and omega_F values are given in units of omega_R
    rabi_units: bool = False

    # "absolute" filter centers are shifted by -omega_X into the internal frame
    frequency_frame: Literal["relative", "absolute"] = "relative"

    oracles: OracleFlags = Field(default_factory=OracleFlags)
    spectrum: Optional[SpectrumSpec] = None
    tolerances: Tolerances = Field(default_factory=Tolerances)
    output: str = "results"
    threads: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def validate_run(self) -> "RunConfig":
        """Cross-field consistency between model, filters and sweep axis."""
        if not self.filters:
            raise ValueError("filters must contain at least one filter specification")
        if self.sweep.axis == "chi" and self.model.kind != "qd":
            raise ValueError("sweep.axis = 'chi' requires model.kind = 'qd'")
        if self.sweep.axis == "rabi_ratio" and self.model.kind != "rf":
            raise ValueError("sweep.axis = 'rabi_ratio' requires model.kind = 'rf'")
        if self.sweep.axis == "lambda" and self.inner_lambda is not None:
            raise ValueError("inner_lambda cannot be combined with sweep.axis = 'lambda'")
        if self.sweep.axis == "lambda" and self.sweep.grid.min <= 0:
            raise ValueError(f"Bandwidth grid must be positive, got min {self.sweep.grid.min}")
        if self.rabi_units and self.model.kind != "rf":
            raise ValueError("rabi_units is only meaningful for model.kind = 'rf'")
        if self.rabi_units and self.inner_lambda is not None and self.inner_lambda.max >= 2.0:
            raise ValueError(
                f"inner_lambda.max must stay below 2 omega_R to avoid detecting the driving laser, "
                f"got {self.inner_lambda.max}"
            )
        if self.inner_lambda is not None and self.inner_lambda.min <= 0:
            raise ValueError(f"inner_lambda grid must be positive, got min {self.inner_lambda.min}")
        return self

    @classmethod
    def from_file(cls, config_path: str) -> "RunConfig":
        """
        Load a run configuration from a JSON file.

        Raises:
            ConfigError: With the JSON position or the offending key path
        """
        if not os.path.exists(config_path):
            raise ConfigError(f"Configuration file not found: {config_path}")

        try:
            with open(config_path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{config_path}:{e.lineno}:{e.colno}: invalid JSON ({e.msg})") from e

        try:
            config = cls(**data)
        except ValidationError as e:
            details = "; ".join(
                f"{'.'.join(str(part) for part in err['loc']) or '<root>'}: {err['msg']}" for err in e.errors()
            )
            raise ConfigError(f"{config_path}: {details}") from e
        except TypeError as e:
            raise ConfigError(f"{config_path}: top-level JSON value must be an object ({e})") from e

        logger.info(f"Loaded configuration from {config_path}")
        return config

    def to_file(self, config_path: str) -> None:
        """Save configuration to a JSON file."""
        with open(config_path, "w", encoding="utf-8") as f:
            f.write(self.model_dump_json(indent=2, by_alias=True))
