"""Bayesian mixture bent-cable models for longitudinal data."""

from ._bentcable import (
    DataError,
    DomainError,
    ModelSetupError,
    NumericalError,
    __version__,
    bent_cable,
    critical_time_point,
    fit,
    q_basis,
    run_cli,
    scenario_names,
    simulate,
)

__all__ = [
    "DataError",
    "DomainError",
    "ModelSetupError",
    "NumericalError",
    "__version__",
    "bent_cable",
    "critical_time_point",
    "fit",
    "q_basis",
    "run_cli",
    "scenario_names",
    "simulate",
]
