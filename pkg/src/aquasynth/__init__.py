"""Deterministic physics-based underwater image synthesis and scoring."""

from .ambient import AmbientLight, ambient_light, ambient_ratio_bg, ambient_ratio_rg
from .errors import AquaSynthError
from .formation import SynthesisParams, invert_formation, synthesize_image
from .metrics import MetricReport, l1_loss, psnr, ssim, uiqm
from .pipeline import (
    DatasetConfig,
    SynthesisRecord,
    generate_dataset,
    plan_dataset,
    read_manifest,
    write_manifest,
)
from .water_optics import (
    WATER_TYPES,
    ChannelCoefficients,
    CoefficientTable,
    default_coefficient_path,
    load_coefficient_table,
    total_attenuation,
)

__version__ = "0.1.0"

__all__ = [
    "AmbientLight",
    "AquaSynthError",
    "ChannelCoefficients",
    "CoefficientTable",
    "DatasetConfig",
    "MetricReport",
    "SynthesisParams",
    "SynthesisRecord",
    "WATER_TYPES",
    "ambient_light",
    "ambient_ratio_bg",
    "ambient_ratio_rg",
    "default_coefficient_path",
    "generate_dataset",
    "invert_formation",
    "l1_loss",
    "load_coefficient_table",
    "plan_dataset",
    "psnr",
    "read_manifest",
    "ssim",
    "synthesize_image",
    "total_attenuation",
    "uiqm",
    "write_manifest",
    "__version__",
]
