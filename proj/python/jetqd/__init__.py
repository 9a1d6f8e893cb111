"""Jet-space quantum dynamics."""

from ._core import (
    AnalyticState,
    ConfigError,
    NumericalError,
    Physics,
    Spinor,
    criteria,
    double_slit,
    ensemble,
    precess,
    run_criterion,
    spin_check,
    trajectory,
)

__all__ = [
    "AnalyticState",
    "ConfigError",
    "NumericalError",
    "Physics",
    "Spinor",
    "criteria",
    "double_slit",
    "ensemble",
    "precess",
    "run_criterion",
    "spin_check",
    "trajectory",
]
__version__ = "0.1.0"
