"""Simulator for cavity-synchronized single-photon sources."""

from ._cavsync import (
    ConfigError,
    DimensionError,
    Error,
    NumericError,
    PhysicalParams,
    __version__,
    count_photons,
    derive,
    dn_curve,
    epsilon_analytic,
    fit_epsilon,
    g2_zero,
    load_config,
    parse_config,
    preset,
    run_cli,
    trajectories,
)

__all__ = [
    "ConfigError",
    "DimensionError",
    "Error",
    "NumericError",
    "PhysicalParams",
    "__version__",
    "count_photons",
    "derive",
    "dn_curve",
    "epsilon_analytic",
    "fit_epsilon",
    "g2_zero",
    "load_config",
    "parse_config",
    "preset",
    "run_cli",
    "trajectories",
]
