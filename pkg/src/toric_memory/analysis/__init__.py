"""Closed-form chain-counting bounds, threshold constants and failure bounds."""

from .chains import (
    CantorLength,
    cantor_length,
    cantor_length_info,
    h1_rate,
    h2_rate,
    l_ss,
    sigma1,
    sigma2,
)
from .spacetime import lstar_coefficient, lstar_max, octa_volume, sigma3, star_ball_count
from .thresholds import (
    SATURATION_2D,
    SATURATION_3D,
    ChainBoundParams,
    CompositionRatio,
    MissingTableEntry,
    OutsideRegionError,
    ThresholdCurve,
    ThresholdRegion,
    failure_bound_2d,
    failure_bound_3d,
    failure_estimate_2d,
    g_factor,
    gamma,
    gamma_bar,
    gbar_factor,
    h3_value,
    p2q_exponent_coefficient,
    predicted_rate_3d,
    saturation_exponent_2d,
    threshold_along_ray,
    threshold_region,
)

__all__ = [
    "CantorLength",
    "ChainBoundParams",
    "CompositionRatio",
    "MissingTableEntry",
    "OutsideRegionError",
    "SATURATION_2D",
    "SATURATION_3D",
    "ThresholdCurve",
    "ThresholdRegion",
    "cantor_length",
    "cantor_length_info",
    "failure_bound_2d",
    "failure_bound_3d",
    "failure_estimate_2d",
    "g_factor",
    "gamma",
    "gamma_bar",
    "gbar_factor",
    "h1_rate",
    "h2_rate",
    "h3_value",
    "l_ss",
    "lstar_coefficient",
    "lstar_max",
    "octa_volume",
    "p2q_exponent_coefficient",
    "predicted_rate_3d",
    "saturation_exponent_2d",
    "sigma1",
    "sigma2",
    "sigma3",
    "star_ball_count",
    "threshold_along_ray",
    "threshold_region",
]
