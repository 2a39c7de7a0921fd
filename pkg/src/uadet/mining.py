"""Mine false positives on the training split into a confounder label set.

Every FP that a detector produces on a training image at the mining
confidence threshold becomes one box of the post-hoc ("fp") class in that
image's mined label file. Validation images are never mined. Merging the
mined files into the prior label set yields the full training variant.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from .dataset import (
    ClassRole,
    DatasetManifest,
    GroundTruthObject,
    format_label_line,
    load_labels,
    load_predictions,
)
from .errors import MissingPredictions, UnknownClass
from .matching import MatchConfig, match_detections


@dataclass
class MiningReport:
    images: int = 0
    fp_total: int = 0
    per_image: dict = field(default_factory=dict)  # image_id -> fp count

    def histogram(self) -> dict[int, int]:
        """fp-count-per-image -> number of images."""
        hist: dict[int, int] = {}
        for count in self.per_image.values():
            hist[count] = hist.get(count, 0) + 1
        return dict(sorted(hist.items()))

    def to_json(self):
        return {
            "images": self.images,
            "fp_total": self.fp_total,
            "fp_per_image_histogram": {str(k): v for k, v in self.histogram().items()},
            "per_image": dict(sorted(self.per_image.items())),
        }

    def write(self, summary_path, csv_path) -> None:
        with open(summary_path, "w", encoding="ascii", newline="\n") as fh:
            json.dump(self.to_json(), fh, indent=2)
            fh.write("\n")
        with open(csv_path, "w", encoding="ascii", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["image_id", "fp_count"])
            for image_id in sorted(self.per_image):
                writer.writerow([image_id, self.per_image[image_id]])


def _training_matches(manifest: DatasetManifest, config: MatchConfig):
    """Match every training image's predictions; yields (image, fp matches)."""
    train = manifest.split("train")
    missing = [im.image_id for im in train if im.predictions is None]
    if missing:
        raise MissingPredictions(missing)
    for image in train:
        truths = load_labels(manifest.resolve(image.labels), manifest.vocabulary)
        detections = load_predictions(manifest.resolve(image.predictions),
                                      manifest.vocabulary)
        result = match_detections(detections, truths, config)
        yield image, result.false_positives()


def count_training_fps(manifest: DatasetManifest,
                       config: MatchConfig = MatchConfig()) -> MiningReport:
    """Mining dry run: per-image training FP counts without writing labels.

    Useful for sweeping the confidence threshold (the count-vs-threshold
    calibration) and for variants whose vocabulary has no fp class.
    """
    report = MiningReport()
    for image, fps in _training_matches(manifest, config):
        report.images += 1
        report.per_image[image.image_id] = len(fps)
        report.fp_total += len(fps)
    return report


def mine_upost(manifest: DatasetManifest, out_dir,
               config: MatchConfig = MatchConfig(),
               fp_class_id: int | None = None) -> MiningReport:
    """Write per-image mined label files for the training split.

    Args:
        manifest: dataset whose training images all carry prediction files.
        out_dir: directory receiving one ``<image_id>.txt`` per training
            image (empty when the image produced no FPs).
        config: matching thresholds; the confidence threshold is the mining
            threshold that the count-vs-threshold calibration sweeps.
        fp_class_id: class id for mined boxes; defaults to the vocabulary's
            post-role class.

    Returns:
        MiningReport with totals and the per-image FP counts.

    Raises:
        MissingPredictions listing training images without predictions.
    """
    if fp_class_id is None:
        post_ids = manifest.vocabulary.ids_with_role(ClassRole.POST)
        if not post_ids:
            raise UnknownClass("vocabulary has no post-role class to mine into")
        fp_class_id = post_ids[0]
    elif fp_class_id not in manifest.vocabulary:
        raise UnknownClass(f"fp_class_id {fp_class_id} not in vocabulary")

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = MiningReport()
    for image, fps in _training_matches(manifest, config):
        lines = [format_label_line(GroundTruthObject(fp_class_id, m.detection.box))
                 for m in fps]
        with open(out_dir / f"{image.image_id}.txt", "w", encoding="ascii",
                  newline="\n") as fh:
            fh.writelines(line + "\n" for line in lines)
        report.images += 1
        report.per_image[image.image_id] = len(lines)
        report.fp_total += len(lines)
    return report
