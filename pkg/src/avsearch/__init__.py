"""avsearch: viewpoint-robust object detection and media search.

The package splits into a detection core (features, viewpoint, detection,
training, models), offline evaluation, and a search layer (store, service,
api, cli) that indexes image and video repositories.
"""

from .config import RuntimeConfig, load_config
from .detection import Detection, detect, detect_multiview, iou, nms
from .estimator import FeaturePyramidExtractor, ViewpointObjectDetector
from .evaluation import (
    EvalDetection,
    GroundTruthBox,
    average_precision,
    evaluate,
    match_detections,
)
from .features import FeatureLevel, FeaturePyramid, build_pyramid, hog_level
from .imaging import load_image, save_pgm
from .models import Component, DetectorModel, Part, load_model, save_model
from .service import SearchService, Segment, group_segments
from .store import DetectionIndex, PyramidCache
from .training import TrainStats, train_detector
from .viewpoint import ViewGrid, backproject_box, sample_view_grid, simulate_view

__version__ = "0.1.0"

__all__ = [
    "Component",
    "Detection",
    "DetectionIndex",
    "DetectorModel",
    "EvalDetection",
    "FeatureLevel",
    "FeaturePyramid",
    "FeaturePyramidExtractor",
    "GroundTruthBox",
    "Part",
    "PyramidCache",
    "RuntimeConfig",
    "SearchService",
    "Segment",
    "TrainStats",
    "ViewGrid",
    "ViewpointObjectDetector",
    "average_precision",
    "backproject_box",
    "build_pyramid",
    "detect",
    "detect_multiview",
    "evaluate",
    "group_segments",
    "hog_level",
    "iou",
    "load_config",
    "load_image",
    "load_model",
    "match_detections",
    "nms",
    "sample_view_grid",
    "save_model",
    "save_pgm",
    "simulate_view",
    "train_detector",
    "__version__",
]
