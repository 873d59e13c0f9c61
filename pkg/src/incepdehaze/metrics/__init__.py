"""Image-quality (PSNR, SSIM, FSIM) and detection (IoU, mAP, mIoU) metrics."""

from .detection import (
    BoundingBox,
    average_precision,
    evaluate_detections,
    iou,
    read_detections,
    write_detections,
)
from .fsim import fsim, phase_congruency
from .quality import QualityReport, luma, psnr, ssim, ssim_map

__all__ = [
    "BoundingBox",
    "QualityReport",
    "average_precision",
    "evaluate_detections",
    "fsim",
    "iou",
    "luma",
    "phase_congruency",
    "psnr",
    "read_detections",
    "ssim",
    "ssim_map",
    "write_detections",
]
