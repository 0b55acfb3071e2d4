"""scikit-learn style wrappers around the detector.

`ViewpointObjectDetector` follows the estimator protocol: constructor args
are hyperparameters stored verbatim, `fit` learns state on `_`-suffixed
attributes, and `get_params`/`set_params` come from `BaseEstimator`.  X is a
list of 2-D grayscale arrays rather than a feature matrix, so the usual
`check_array` machinery does not apply; inputs go through the same
validators as the rest of the package.
"""

from __future__ import annotations

import math

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .detection import detect_multiview, nms
from .evaluation import EvalDetection, GroundTruthBox, evaluate
from .features import build_pyramid
from .models import DetectorModel
from .training import TrainStats, train_detector
from .validation import check_boxes, check_image
from .viewpoint import sample_view_grid

__all__ = ["FeaturePyramidExtractor", "ViewpointObjectDetector"]


class FeaturePyramidExtractor(TransformerMixin, BaseEstimator):
    """Transform grayscale images into multiscale HOG feature pyramids."""

    def __init__(self, cell_size=8, levels_per_octave=10, min_cells=5):
        self.cell_size = cell_size
        self.levels_per_octave = levels_per_octave
        self.min_cells = min_cells

    def fit(self, X, y=None):
        # stateless; fit only validates
        for img in X:
            check_image(img)
        self.n_features_in_ = len(X)
        return self

    def transform(self, X):
        return [
            build_pyramid(check_image(img), self.cell_size,
                          self.levels_per_octave, self.min_cells)
            for img in X
        ]


class ViewpointObjectDetector(BaseEstimator):
    """Single-class detector with simulated-viewpoint search.

    Parameters mirror RuntimeConfig; `fit(X, y)` takes images and per-image
    box lists (an empty list marks a negative image), `predict(X)` returns
    per-image detection lists, and `score(X, y)` is average precision.
    """

    def __init__(self, class_name="object", cell_size=8, levels_per_octave=10,
                 min_cells=5, t_max=2.0, rotation_base_deg=72.0, antialias=0.8,
                 nms_iou=0.5, svm_c=0.01, epochs=30, mining_rounds=1,
                 negative_floor=-1.0, max_negative_cache=20000, seed=0):
        self.class_name = class_name
        self.cell_size = cell_size
        self.levels_per_octave = levels_per_octave
        self.min_cells = min_cells
        self.t_max = t_max
        self.rotation_base_deg = rotation_base_deg
        self.antialias = antialias
        self.nms_iou = nms_iou
        self.svm_c = svm_c
        self.epochs = epochs
        self.mining_rounds = mining_rounds
        self.negative_floor = negative_floor
        self.max_negative_cache = max_negative_cache
        self.seed = seed

    # -- estimator protocol

    def fit(self, X, y):
        if len(X) != len(y):
            raise ValueError(f"X and y disagree: {len(X)} images, {len(y)} box lists")
        positives, negatives = [], []
        for img, boxes in zip(X, y):
            img = check_image(img)
            if boxes is not None and len(boxes) > 0:
                positives.append((img, check_boxes(boxes)))
            else:
                negatives.append(img)
        stats = TrainStats()
        self.model_ = train_detector(
            positives, negatives, self.class_name,
            cell_size=self.cell_size,
            levels_per_octave=self.levels_per_octave,
            min_cells=self.min_cells,
            c=self.svm_c,
            epochs=self.epochs,
            rounds=self.mining_rounds,
            negative_floor=self.negative_floor,
            max_negative_cache=self.max_negative_cache,
            seed=self.seed,
            stats=stats,
        )
        self.train_stats_ = stats
        self.threshold_ = self.model_.threshold
        return self

    def decision_function(self, X):
        """Per-image pooled detections at the model threshold, NMS applied."""
        check_is_fitted(self, "model_")
        grid = sample_view_grid(self.t_max, math.radians(self.rotation_base_deg))
        out = []
        for img in X:
            raw = detect_multiview(
                check_image(img), self.model_, grid,
                min_cells=self.min_cells, antialias=self.antialias,
            )
            out.append(nms(raw, self.nms_iou))
        return out

    def predict(self, X):
        """Detection boxes per image: list of (x0, y0, x1, y1) tuples."""
        return [[d.box for d in dets] for dets in self.decision_function(X)]

    def score(self, X, y, iou_min=0.5):
        """Average precision (exact envelope) over the given ground truth."""
        check_is_fitted(self, "model_")
        detections, truths = [], []
        for i, (dets, boxes) in enumerate(zip(self.decision_function(X), y)):
            image_id = f"im{i:05d}"
            detections.extend(EvalDetection(image_id, d.score, d.box) for d in dets)
            truths.extend(GroundTruthBox(image_id, b) for b in check_boxes(boxes or []))
        return evaluate(detections, truths, iou_min=iou_min)

    # -- persistence helpers

    def to_model(self) -> DetectorModel:
        check_is_fitted(self, "model_")
        return self.model_

    @classmethod
    def from_model(cls, model: DetectorModel, **params) -> "ViewpointObjectDetector":
        est = cls(class_name=model.class_name, cell_size=model.cell_size,
                  levels_per_octave=model.levels_per_octave, **params)
        est.model_ = model
        est.threshold_ = model.threshold
        return est
