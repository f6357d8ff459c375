"""Patch-based volumetric segmentation tooling.

Library + CLI covering the non-network parts of a patch-based segmentation
workflow: volume I/O, patch extraction and sampling, output reconstruction
with spline-window blending, rigid test-time-augmentation ensembling,
median z-filtering, IoU evaluation, and a hyperparameter sweep-notation
parser/sampler.
"""

from .volcore import (
    Dtype,
    SplitMode,
    SplitSpec,
    Volume,
    binarize,
    dilate,
    erode,
    load_volume,
    new_volume,
    replicate_slices,
    save_volume,
    split_validation,
)

__version__ = "0.1.0"

__all__ = [
    "Dtype",
    "SplitMode",
    "SplitSpec",
    "Volume",
    "binarize",
    "dilate",
    "erode",
    "load_volume",
    "new_volume",
    "replicate_slices",
    "save_volume",
    "split_validation",
    "__version__",
]
