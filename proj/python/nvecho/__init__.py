"""Mean-field simulator of an optically cooled spin ensemble in a microwave cavity."""

import json

import numpy as np

from ._nvecho import (
    AnalysisError,
    ConfigError,
    NumericError,
    ProtocolError,
    StructuralError,
    cooled_population,
    omega_from_power,
    output_power_dbm,
    scenario_names,
    thermal_photon_number,
    validate,
    version,
)
from . import _nvecho

__version__ = version()

_ARRAYS = ("times_s", "photon_number", "power_dbm", "detuning_hz", "reflectance")


def _overrides(overrides):
    if overrides is None:
        return ""
    return overrides if isinstance(overrides, str) else json.dumps(overrides)


def _as_arrays(result):
    for key in _ARRAYS:
        if key in result:
            result[key] = np.asarray(result[key], dtype=float)
    if "config" in result:
        result["config"] = json.loads(result["config"])
    return result


def scenario(name, overrides=None):
    """Resolved scenario config as a dict; `overrides` is merged on top."""
    return json.loads(_nvecho.scenario_json(name, _overrides(overrides)))


def run(name, overrides=None):
    """Integrate a scenario; returns the cavity trace as arrays plus its echo or beats report."""
    return _as_arrays(_nvecho.run(name, _overrides(overrides)))


def spectrum(name, overrides=None, method=None):
    """Weak-probe reflection spectrum |r|^2 against probe detuning (Hz)."""
    return _as_arrays(_nvecho.spectrum(name, _overrides(overrides), method or ""))


__all__ = [
    "AnalysisError",
    "ConfigError",
    "NumericError",
    "ProtocolError",
    "StructuralError",
    "cooled_population",
    "omega_from_power",
    "output_power_dbm",
    "run",
    "scenario",
    "scenario_names",
    "spectrum",
    "thermal_photon_number",
    "validate",
    "version",
]
