# SPDX-License-Identifier: Apache-2.0
"""LiFePO4 state-of-charge estimation with a multi-model Kalman filter bank."""

from ._core import (
    Curve,
    LfpsocError,
    config_text,
    estimate,
    identify,
    load_config,
    load_curve,
    metrics,
    reference_curve,
    run_scenario,
    simulate,
)

__all__ = [
    "Curve",
    "LfpsocError",
    "config_text",
    "estimate",
    "identify",
    "load_config",
    "load_curve",
    "metrics",
    "reference_curve",
    "run_scenario",
    "simulate",
]

