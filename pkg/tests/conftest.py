"""
Pytest Configuration and Fixtures

Shared fixtures for the level 1-4 tests: small measures, gauges, temporary
results roots and JSON input files.
"""

import json
import os

import pytest

# Set environment variables for testing, before app.config is imported
os.environ.setdefault("RESULTS_DIR", "results-test")
os.environ.setdefault("LOG_LEVEL", "WARNING")
os.environ.setdefault("TRIAL_WORKERS", "1")
os.environ.setdefault("BOOTSTRAP_SAMPLES", "50")


@pytest.fixture
def unit_atom():
    """Unit point mass at the origin of R."""
    from app.services.measure_service import DiscreteMeasure

    return DiscreteMeasure([[0.0]], [1.0], d=1)


@pytest.fixture
def two_atoms():
    """delta_0 + delta_1 in R."""
    from app.services.measure_service import DiscreteMeasure

    return DiscreteMeasure([[0.0], [1.0]], [1.0, 1.0], d=1)


@pytest.fixture
def unit_interval():
    """Lebesgue measure on [0, 1]."""
    from app.services.measure_service import CubeMeasure

    return CubeMeasure.lebesgue([0.0], 1.0)


@pytest.fixture
def linear_gauge():
    """h(t) = t in d = 1."""
    from app.services.gauge_service import PowerGauge

    return PowerGauge(1.0, 1)


@pytest.fixture
def sqrt_gauge():
    """h(t) = t^(1/2) in d = 1."""
    from app.services.gauge_service import PowerGauge

    return PowerGauge(0.5, 1)


@pytest.fixture
def results_root(tmp_path):
    """Fresh results directory per test."""
    root = tmp_path / "results"
    root.mkdir()
    return root


@pytest.fixture
def write_json(tmp_path):
    """Write a JSON document under tmp_path and return its path."""

    def _write(name, data):
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path

    return _write
