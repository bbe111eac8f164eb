"""Numerical laboratory for the radial loglog energy-supercritical Schrodinger equation."""

from .core import (
    CriticalConstants,
    ModelParams,
    critical_constants,
    g_eval,
    g_log_derivative_ratio,
    g_prime,
    potential_F,
    tilde_F,
)

__all__ = [
    "CriticalConstants",
    "ModelParams",
    "critical_constants",
    "g_eval",
    "g_log_derivative_ratio",
    "g_prime",
    "potential_F",
    "tilde_F",
]

__version__ = "0.1.0"
