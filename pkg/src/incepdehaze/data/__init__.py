"""Image/depth I/O, dataset manifests and the synthesis pipeline."""

from .io import (
    dequantize,
    load_depth,
    load_image,
    quantize,
    read_pfm,
    resize_bilinear,
    save_depth,
    save_image,
    write_pfm,
)
from .manifest import SPLITS, ClearRecord, Manifest, Variant
from .pipeline import (
    DEFAULT_FRACTIONS,
    MANIFEST_NAME,
    PipelineConfig,
    assign_splits,
    build_dataset,
    discover_pairs,
    load_pairs,
    plan_counts,
    replay_check,
    split_counts,
)

__all__ = [
    "DEFAULT_FRACTIONS",
    "MANIFEST_NAME",
    "SPLITS",
    "ClearRecord",
    "Manifest",
    "PipelineConfig",
    "Variant",
    "assign_splits",
    "build_dataset",
    "dequantize",
    "discover_pairs",
    "load_depth",
    "load_image",
    "load_pairs",
    "plan_counts",
    "quantize",
    "read_pfm",
    "replay_check",
    "resize_bilinear",
    "save_depth",
    "save_image",
    "split_counts",
    "write_pfm",
]
