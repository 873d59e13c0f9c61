"""Depth-driven synthetic haze generation."""

from .synthesis import (
    AIRLIGHT_VALUES,
    BETA_RANGE,
    HazeParams,
    apply_haze,
    invert_haze,
    normalize_depth,
    replay_variant,
    sample_params,
    synthesize_variants,
    synthetic_depth,
    transmission_from_depth,
    variant_stream,
)

__all__ = [
    "AIRLIGHT_VALUES",
    "BETA_RANGE",
    "HazeParams",
    "apply_haze",
    "invert_haze",
    "normalize_depth",
    "replay_variant",
    "sample_params",
    "synthesize_variants",
    "synthetic_depth",
    "transmission_from_depth",
    "variant_stream",
]
