"""lipextract: frontal-face video to lip landmark tracks and lip crop stacks."""

from .landmarks import ClassicalLandmarker, DlibLandmarker, default_landmarker, lip_ring
from .pipeline import ExtractSummary, NoFaceFound, expected_frames, extract
from .video import UndecodableVideo, resampled_count, source_index

__version__ = "0.1.0"

__all__ = [
    "ClassicalLandmarker",
    "DlibLandmarker",
    "ExtractSummary",
    "NoFaceFound",
    "UndecodableVideo",
    "default_landmarker",
    "expected_frames",
    "extract",
    "lip_ring",
    "resampled_count",
    "source_index",
]
