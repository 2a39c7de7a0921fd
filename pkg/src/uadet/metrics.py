"""Detection evaluation battery: PR and FROC curves, AUCs, and entropy.

Curves are swept over every distinct detection confidence, descending, so
they have the finest possible resolution. A single greedy matching pass
per image is enough for the whole sweep: greedy verdicts depend only on
higher-confidence detections, so the verdict set at threshold t is exactly
the verdicts of detections with confidence >= t. Tests hold this against a
brute-force oracle that re-matches from scratch at every threshold.

Binary entropy is the per-prediction uncertainty measure:
``-(p*log(p) + (1-p)*log(1-p))`` with ``0*log(0) = 0``, in nats by default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, EmptySplit
from .matching import MatchConfig, Verdict, match_detections

# Sentinel threshold above every legal confidence: the zero-detections
# operating point that anchors each curve.
SENTINEL_THRESHOLD = 1.0 + 1e-6

LOG_UNITS = ("nats", "bits")


def entropy(p: float, unit: str = "nats") -> float:
    """Binary entropy of a confidence value.

    Args:
        p: probability in [0, 1].
        unit: "nats" (natural log, default) or "bits" (base 2).

    Returns:
        Entropy in [0, ln 2] nats (or [0, 1] bits); 0 at p in {0, 1},
        maximal at p = 0.5, symmetric under p <-> 1-p.
    """
    if unit not in LOG_UNITS:
        raise DomainError(f"unit must be one of {LOG_UNITS}, got {unit!r}")
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"probability {p} outside [0, 1]")
    if p == 0.0 or p == 1.0:
        return 0.0
    value = -(p * math.log(p) + (1.0 - p) * math.log(1.0 - p))
    if unit == "bits":
        value /= math.log(2.0)
    return value


@dataclass(frozen=True)
class CurvePoint:
    x: float  # FPPI for FROC, recall for PR
    y: float  # sensitivity for FROC, precision for PR
    threshold: float


@dataclass
class FROCCurve:
    points: list[CurvePoint]
    iou_threshold: float
    n_images: int
    n_truths: int


@dataclass
class PRCurve:
    points: list[CurvePoint]
    iou_threshold: float
    n_images: int
    n_truths: int

    def auc(self) -> float:
        """Trapezoid area over recall; precision is not envelope-interpolated."""
        pts = sorted(self.points, key=lambda p: p.x)
        area = 0.0
        for a, b in zip(pts, pts[1:]):
            area += (b.x - a.x) * (a.y + b.y) / 2.0
        return area


def _pooled_verdicts(samples, iou_threshold: float, target_class: int):
    """One matching pass per image; returns (confidence, is_tp) pooled, n_truths."""
    config = MatchConfig(iou_threshold=iou_threshold, confidence_threshold=0.0,
                         target_class_id=target_class)
    pooled = []
    n_truths = 0
    for detections, truths in samples:
        result = match_detections(detections, truths, config)
        n_truths += result.n_truths
        pooled.extend((m.detection.confidence, m.verdict is Verdict.TP)
                      for m in result.matches)
    pooled.sort(key=lambda v: -v[0])
    return pooled, n_truths


def _sweep(samples, iou_threshold, target_class):
    """Cumulative (threshold, tp, fp) at every distinct confidence, descending."""
    if not samples:
        raise EmptySplit("no images to evaluate")
    pooled, n_truths = _pooled_verdicts(samples, iou_threshold, target_class)
    rows = []
    tp = fp = 0
    index = 0
    while index < len(pooled):
        threshold = pooled[index][0]
        while index < len(pooled) and pooled[index][0] == threshold:
            if pooled[index][1]:
                tp += 1
            else:
                fp += 1
            index += 1
        rows.append((threshold, tp, fp))
    return rows, n_truths


def froc_curve(samples, iou_threshold: float = 0.2,
               target_class: int = 0) -> FROCCurve:
    """Sensitivity vs false positives per image over all confidence thresholds.

    Args:
        samples: per-image (detections, truths) pairs.
        iou_threshold: overlap needed for a detection to count as a hit.
        target_class: the evaluated class (other classes are invisible).
    """
    rows, n_truths = _sweep(samples, iou_threshold, target_class)
    n_images = len(samples)
    points = [CurvePoint(0.0, 0.0, SENTINEL_THRESHOLD)]
    for threshold, tp, fp in rows:
        sensitivity = tp / n_truths if n_truths else 0.0
        points.append(CurvePoint(fp / n_images, sensitivity, threshold))
    return FROCCurve(points=points, iou_threshold=iou_threshold,
                     n_images=n_images, n_truths=n_truths)


def pr_curve(samples, iou_threshold: float = 0.2,
             target_class: int = 0) -> PRCurve:
    """Precision vs recall over the same sweep; precision at zero retained is 1."""
    rows, n_truths = _sweep(samples, iou_threshold, target_class)
    points = [CurvePoint(0.0, 1.0, SENTINEL_THRESHOLD)]
    for threshold, tp, fp in rows:
        recall = tp / n_truths if n_truths else 0.0
        points.append(CurvePoint(recall, tp / (tp + fp), threshold))
    return PRCurve(points=points, iou_threshold=iou_threshold,
                   n_images=len(samples), n_truths=n_truths)


def sensitivity_at_fppi(curve: FROCCurve, target_fppi: float) -> float:
    """Step rule: best sensitivity among operating points with FPPI <= target."""
    eligible = [p.y for p in curve.points if p.x <= target_fppi]
    return max(eligible, default=0.0)


def froc_auc(curve: FROCCurve, fppi_cap: float) -> float:
    """Normalized area under the FROC curve over [0, fppi_cap].

    The piecewise-linear curve is extended horizontally past its last point
    (and before its first), truncated at the cap, trapezoid-integrated, and
    divided by the cap so a perfect detector scores 1.0.
    """
    if fppi_cap <= 0:
        raise DomainError(f"fppi_cap must be positive, got {fppi_cap}")
    pts = [(p.x, p.y) for p in curve.points]
    if not pts:
        return 0.0
    area = 0.0
    first_x, first_y = pts[0]
    if first_x > 0:
        area += min(first_x, fppi_cap) * first_y
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        if x0 >= fppi_cap:
            break
        hi = min(x1, fppi_cap)
        if hi <= x0:
            continue
        y_hi = y1 if x1 == x0 else y0 + (y1 - y0) * (hi - x0) / (x1 - x0)
        area += (hi - x0) * (y0 + y_hi) / 2.0
    last_x, last_y = pts[-1]
    if last_x < fppi_cap:
        area += (fppi_cap - last_x) * last_y
    return area / fppi_cap


@dataclass
class EntropySummary:
    """Distribution summary of per-prediction entropies.

    Rank statistics use the lower convention: for n values sorted
    ascending, the median is element (n-1)//2, the quartiles elements
    (n-1)//4 and 3*(n-1)//4.
    """

    entropies: tuple[float, ...]  # sorted ascending
    unit: str
    count: int
    median: float | None
    q1: float | None
    q3: float | None
    min: float | None
    max: float | None

    @property
    def is_empty(self) -> bool:
        return self.count == 0

    def to_json(self):
        return {
            "count": self.count,
            "unit": self.unit,
            "median": self.median,
            "q1": self.q1,
            "q3": self.q3,
            "min": self.min,
            "max": self.max,
        }


def entropy_summary(detections, target_class: int = 0,
                    confidence_floor: float = 0.0,
                    unit: str = "nats") -> EntropySummary:
    """Entropy statistics over retained predictions.

    Args:
        detections: iterable of Detection (any classes mixed).
        target_class: only this class enters the population.
        confidence_floor: predictions below this confidence are dropped,
            mirroring a detector's deployment threshold.
        unit: entropy unit, "nats" or "bits".

    An empty population is reported as a summary with count 0, not raised.
    """
    values = sorted(
        entropy(d.confidence, unit) for d in detections
        if d.class_id == target_class and d.confidence >= confidence_floor
    )
    n = len(values)
    if n == 0:
        return EntropySummary((), unit, 0, None, None, None, None, None)
    return EntropySummary(
        entropies=tuple(values),
        unit=unit,
        count=n,
        median=values[(n - 1) // 2],
        q1=values[(n - 1) // 4],
        q3=values[3 * (n - 1) // 4],
        min=values[0],
        max=values[-1],
    )


# ---------------------------------------------------------------------------
# Split-level evaluation summary (the report the CLI and experiment emit)


@dataclass(frozen=True)
class EvalConfig:
    iou_thresholds: tuple[float, ...] = (0.2, 0.5)
    fppi_targets: tuple[float, ...] = (0.5, 1.0, 2.0, 5.0)
    target_class: int = 0
    confidence_floor: float = 0.25  # entropy population floor
    entropy_unit: str = "nats"
    fppi_cap: float = 5.0


def _fmt(value: float) -> str:
    return format(value, ".9g")


def write_froc_csv(curve: FROCCurve, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("threshold,fppi,sensitivity\n")
        for p in curve.points:
            fh.write(f"{_fmt(p.threshold)},{_fmt(p.x)},{_fmt(p.y)}\n")

def write_pr_csv(curve: PRCurve, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("threshold,recall,precision\n")
        for p in curve.points:
            fh.write(f"{_fmt(p.threshold)},{_fmt(p.x)},{_fmt(p.y)}\n")


@dataclass
class SplitEvaluation:
    n_images: int
    n_truths: int
    target_class: int
    froc: dict  # iou -> FROCCurve
    pr: dict  # iou -> PRCurve
    sensitivity: dict  # iou -> {fppi target -> sensitivity}
    pr_aucs: dict  # iou -> float
    froc_aucs: dict  # iou -> float
    entropy: EntropySummary
    config: EvalConfig

    def to_json(self):
        def iou_key(value):
            return _fmt(value)

        return {
            "images": self.n_images,
            "truths": self.n_truths,
            "target_class": self.target_class,
            "sensitivity_at_fppi": {
                iou_key(iou): {_fmt(t): self.sensitivity[iou][t]
                               for t in self.config.fppi_targets}
                for iou in self.config.iou_thresholds
            },
            "pr_auc": {iou_key(iou): self.pr_aucs[iou]
                       for iou in self.config.iou_thresholds},
            "froc_auc": {iou_key(iou): self.froc_aucs[iou]
                         for iou in self.config.iou_thresholds},
            "froc_auc_fppi_cap": self.config.fppi_cap,
            "entropy": {
                **self.entropy.to_json(),
                "confidence_floor": self.config.confidence_floor,
            },
        }

    def write_curves(self, out_dir, prefix="") -> list:
        """Write one FROC and one PR CSV per IoU threshold; returns paths."""
        from pathlib import Path

        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        written = []
        for iou in self.config.iou_thresholds:
            tag = _fmt(iou).replace(".", "p")
            froc_path = out_dir / f"{prefix}froc_iou{tag}.csv"
            pr_path = out_dir / f"{prefix}pr_iou{tag}.csv"
            write_froc_csv(self.froc[iou], froc_path)
            write_pr_csv(self.pr[iou], pr_path)
            written += [froc_path, pr_path]
        return written


def evaluate_samples(samples, config: EvalConfig = EvalConfig()) -> SplitEvaluation:
    """Compute the full curve/AUC/entropy battery over per-image samples.

    samples: (detections, truths) pairs, one per image.
    """
    froc, pr, sens, pr_aucs, froc_aucs = {}, {}, {}, {}, {}
    for iou in config.iou_thresholds:
        fc = froc_curve(samples, iou, config.target_class)
        pc = pr_curve(samples, iou, config.target_class)
        froc[iou] = fc
        pr[iou] = pc
        sens[iou] = {t: sensitivity_at_fppi(fc, t) for t in config.fppi_targets}
        pr_aucs[iou] = pc.auc()
        froc_aucs[iou] = froc_auc(fc, config.fppi_cap)
    all_dets = [d for dets, _ in samples for d in dets]
    summary = entropy_summary(all_dets, config.target_class,
                              config.confidence_floor, config.entropy_unit)
    return SplitEvaluation(
        n_images=len(samples),
        n_truths=froc[config.iou_thresholds[0]].n_truths,
        target_class=config.target_class,
        froc=froc, pr=pr, sensitivity=sens, pr_aucs=pr_aucs,
        froc_aucs=froc_aucs, entropy=summary, config=config,
    )


def evaluate_split(manifest, split: str,
                   config: EvalConfig = EvalConfig()) -> SplitEvaluation:
    """Evaluate a manifest split's predictions against its labels."""
    from .dataset import load_split_samples

    triples = load_split_samples(manifest, split)
    if not triples:
        raise EmptySplit(f"split {split!r} has no images")
    samples = [(dets, truths) for _, truths, dets in triples]
    return evaluate_samples(samples, config)
