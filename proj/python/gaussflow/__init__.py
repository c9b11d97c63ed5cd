"""Python bindings for the gaussflow C++ core."""

import json

from ._core import (
    CapError,
    DegeneratePlane,
    DimensionError,
    DomainError,
    Error,
    ParseError,
    StencilError,
    ValidationError,
    __version__,
    certify_bj14,
    estimate_eps0,
    estimate_eps_T2,
    grim_reaper_residual,
    jordan_angles,
    q_logv,
    q_v,
    rayleigh_min,
    slope_v,
    validate_config,
    w_pairing,
)
from ._core import run_experiment as _run_experiment


def run_experiment(config, out_dir):
    """Run a config (dict or JSON text). Returns (exit_code, report dict)."""
    text = config if isinstance(config, str) else json.dumps(config)
    code, report = _run_experiment(text, str(out_dir))
    return code, json.loads(report)


__all__ = [
    "CapError",
    "DegeneratePlane",
    "DimensionError",
    "DomainError",
    "Error",
    "ParseError",
    "StencilError",
    "ValidationError",
    "__version__",
    "certify_bj14",
    "estimate_eps0",
    "estimate_eps_T2",
    "grim_reaper_residual",
    "jordan_angles",
    "q_logv",
    "q_v",
    "rayleigh_min",
    "run_experiment",
    "slope_v",
    "validate_config",
    "w_pairing",
]
