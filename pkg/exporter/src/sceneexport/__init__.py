"""Offline exporter producing taskscene-compatible schema files."""

from .export import ExportManifest, export_images, export_observations, export_tasks
from .models import ModelError, image_model, text_model
from .segment import Intrinsics, threshold_segments

__version__ = "0.1.0"

__all__ = [
    "ExportManifest",
    "Intrinsics",
    "ModelError",
    "export_images",
    "export_observations",
    "export_tasks",
    "image_model",
    "text_model",
    "threshold_segments",
]
