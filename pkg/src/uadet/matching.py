"""Greedy confidence-ordered matching of detections to ground truth.

The protocol is the standard detector-evaluation one: detections of the
target class at or above the confidence threshold are processed in
descending confidence; each claims the still-unmatched truth with the
highest IoU at or above the IoU threshold, otherwise it is a false
positive. A second hit on an already-claimed truth is a false positive.

Ties in confidence are broken by ascending x_min, then y_min (then size),
which makes the processing order, and therefore every verdict, independent
of input order.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .dataset import Detection, GroundTruthObject
from .errors import ConfigError
from .geometry import iou_xyxy


@dataclass(frozen=True)
class MatchConfig:
    iou_threshold: float = 0.2
    confidence_threshold: float = 0.25
    target_class_id: int = 0

    def __post_init__(self):
        if not 0.0 < self.iou_threshold <= 1.0:
            raise ConfigError(f"iou_threshold {self.iou_threshold} outside (0, 1]")
        if not 0.0 <= self.confidence_threshold <= 1.0:
            raise ConfigError(
                f"confidence_threshold {self.confidence_threshold} outside [0, 1]"
            )


class Verdict(enum.Enum):
    TP = "tp"
    FP = "fp"


@dataclass(frozen=True)
class DetectionMatch:
    """One retained detection's outcome.

    ``iou`` is the overlap with the claimed truth for a TP; for an FP it is
    the best overlap seen among still-unmatched truths (0.0 if none), which
    records near misses.
    """

    detection: Detection
    verdict: Verdict
    truth_index: int | None
    iou: float


@dataclass
class MatchResult:
    matches: list[DetectionMatch]  # in canonical processing order
    n_truths: int

    @property
    def tp_count(self) -> int:
        return sum(1 for m in self.matches if m.verdict is Verdict.TP)

    @property
    def fp_count(self) -> int:
        return sum(1 for m in self.matches if m.verdict is Verdict.FP)

    def false_positives(self) -> list[DetectionMatch]:
        return [m for m in self.matches if m.verdict is Verdict.FP]


def canonical_order(detections) -> list[Detection]:
    """Descending confidence; ties by ascending x_min, y_min, then size."""
    def key(d: Detection):
        x_min, y_min, _, _ = d.box.to_xyxy()
        return (-d.confidence, x_min, y_min, d.box.w, d.box.h)

    return sorted(detections, key=key)


def match_detections(detections, truths, config: MatchConfig = MatchConfig()) -> MatchResult:
    """Classify target-class detections as TP or FP against ground truth.

    Detections below the confidence threshold, and detections or truths of
    other classes, are excluded before matching. Each truth is claimed by
    at most one detection.
    """
    target = config.target_class_id
    retained = canonical_order(
        d for d in detections
        if d.class_id == target and d.confidence >= config.confidence_threshold
    )
    boxes = [t.box.to_xyxy() for t in truths if t.class_id == target]
    unmatched = list(range(len(boxes)))
    matches = []
    for det in retained:
        det_box = det.box.to_xyxy()
        best_index, best_iou = None, 0.0
        for t in unmatched:
            value = iou_xyxy(det_box, boxes[t])
            if value > best_iou:
                best_index, best_iou = t, value
        if best_index is not None and best_iou >= config.iou_threshold:
            unmatched.remove(best_index)
            matches.append(DetectionMatch(det, Verdict.TP, best_index, best_iou))
        else:
            matches.append(DetectionMatch(det, Verdict.FP, None, best_iou))
    return MatchResult(matches=matches, n_truths=len(boxes))
