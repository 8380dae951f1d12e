"""
Shared pytest fixtures for filterstat tests.
"""

import json
import logging
from typing import Any, Dict

import numpy as np
import pytest

from filterstat.config import FilterKind, FilterSpec, QDParams, RFParams
from filterstat.correlations import CorrelationEngine
from filterstat.emitters import ladder_model, neutral_qd, resonance_fluorescence

# ============================================================================
# Emitter Fixtures
# ============================================================================


@pytest.fixture
def rf_params() -> RFParams:
    """Resonance fluorescence with gamma_sp = 0.3 Omega_R."""
    return RFParams(omega_R=1.0, gamma_sp=0.3, gamma_ph=0.0)


@pytest.fixture
def rf_model(rf_params):
    """Two-level emitter model in the laser frame."""
    return resonance_fluorescence(rf_params)


@pytest.fixture
def qd_params() -> QDParams:
    """Small quantum dot: reduced binding energy and a pump strong enough to populate XX."""
    return QDParams(chi=200.0, gamma_sp=0.67, gamma_ph=2.0, gamma_S_e=0.05, gamma_S_h=0.05, pump_P=0.5)


@pytest.fixture
def qd_model(qd_params):
    """Neutral quantum dot model."""
    return neutral_qd(qd_params)


@pytest.fixture
def ladder():
    """Three-level ladder with pump/decay ratio 1/4."""
    return ladder_model(rate=1.0, pump=0.25)


@pytest.fixture(scope="module")
def rf_engine():
    """Correlation engine for Omega_R = 1, gamma_sp = 0.3, shared within a test module."""
    return CorrelationEngine(resonance_fluorescence(RFParams(omega_R=1.0, gamma_sp=0.3)))


# ============================================================================
# Filter Fixtures
# ============================================================================


@pytest.fixture
def lorentzian() -> FilterSpec:
    """Lorentzian filter on the upper Mollow side peak."""
    return FilterSpec(kind=FilterKind.LORENTZIAN, omega_F=2.0, bandwidth=0.5)


@pytest.fixture
def gaussian() -> FilterSpec:
    """Gaussian filter on the upper Mollow side peak."""
    return FilterSpec(kind=FilterKind.GAUSSIAN, omega_F=2.0, bandwidth=0.5)


@pytest.fixture
def rectangular() -> FilterSpec:
    """Rectangular filter on the upper Mollow side peak."""
    return FilterSpec(kind=FilterKind.RECTANGULAR, omega_F=2.0, bandwidth=0.5)


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded random generator for property checks."""
    return np.random.default_rng(20240611)


# ============================================================================
# Configuration Fixtures
# ============================================================================


@pytest.fixture
def rf_run_config() -> Dict[str, Any]:
    """Small resonance-fluorescence bandwidth sweep."""
    return {
        "model": {"kind": "rf", "rf": {"omega_R": 1.0, "gamma_sp": 0.3, "gamma_ph": 0.0}},
        "rabi_units": True,
        "filters": [{"kind": "lorentzian", "omega_F": 2.0, "lambda": 0.5}],
        "sweep": {"axis": "lambda", "grid": {"min": 0.1, "max": 1.5, "points": 5, "spacing": "log"}},
        "spectrum": {"min": -4.0, "max": 4.0, "points": 81, "probe_lambda": 0.05},
    }


@pytest.fixture
def restore_root_logger():
    """Put the root logger back after a test that calls setup_logging."""
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield root
    root.handlers[:] = handlers
    root.setLevel(level)


@pytest.fixture
def write_config(tmp_path):
    """Write a configuration dict to a JSON file and return its path."""

    def _write(data: Dict[str, Any], name: str = "config.json") -> str:
        path = tmp_path / name
        path.write_text(json.dumps(data, indent=2), encoding="utf-8")
        return str(path)

    return _write
