"""Singly periodic maximal surfaces in Lorentz-Minkowski space."""

import json as _json

from ._core import (
    _run_json,
    DiagnosticsError,
    Error,
    ObstructionError,
    QuadratureError,
    ValidationError,
    commands,
    config_hash,
    main,
    period_matrix,
    s2_point,
    spinor_sections,
    validate_branch,
)


def run(command, config):
    """Run a command on a config dict; returns the decoded report (with its exit_code)."""
    return _json.loads(_run_json(command, _json.dumps(config)))


__all__ = [
    "DiagnosticsError",
    "Error",
    "ObstructionError",
    "QuadratureError",
    "ValidationError",
    "commands",
    "config_hash",
    "main",
    "period_matrix",
    "run",
    "s2_point",
    "spinor_sections",
    "validate_branch",
]
