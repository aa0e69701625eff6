"""Finite-scale estimation of theta-intermediate dimensions on dyadic sets."""

from .covering import (
    CoveringQuery,
    CoveringResult,
    DimensionEstimate,
    brute_force_cover_cost,
    default_schedule,
    dim_estimate,
    optimal_cover_cost,
    theta_sweep,
)
from .dyadic_core import DyadicCube, DyadicSet, build_from_points, dyadic_dimension, load_leaves, save_leaves
from .errors import *  # noqa: F401,F403

__version__ = "0.1.0"
