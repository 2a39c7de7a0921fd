"""Class vocabulary, dataset manifests, label I/O, and label-set pipelines.

The central idea is a three-way partition of the class vocabulary:

* ``target`` -- the lesion class the detector is scored on (always id 0),
* ``uprior`` -- anatomy classes whose labels can be produced up front from
  segmentation masks (one box per connected component),
* ``upost`` -- a single catch-all class for confounders mined from a
  trained detector's false positives.

Label-set variants keep or drop roles and remap the surviving class ids to
a contiguous range, which is how the ablation datasets are composed.

File formats (all plain text, one file per image):

* label line:       ``<class_id> <cx> <cy> <w> <h>``
* prediction line:  ``<class_id> <confidence> <cx> <cy> <w> <h>``

with normalized center/size coordinates printed to 6 decimals, and a JSON
manifest tying images, splits, vocabulary, and relative file paths
together (see docs/formats.md).
"""

from __future__ import annotations

import enum
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    DimensionMismatch,
    InvalidBox,
    ParseError,
    UnknownClass,
    ValidationError,
)
from .geometry import NormalizedBBox, components_from_mask, normalize, read_mask

MANIFEST_FORMAT = "uadet-manifest"
MANIFEST_VERSION = 1
SPLITS = ("train", "val")


class ClassRole(enum.Enum):
    TARGET = "target"
    PRIOR = "uprior"
    POST = "upost"


class LabelSetVariant(enum.Enum):
    """Which roles a composed dataset keeps."""

    TARGET_ONLY = "target-only"
    TARGET_PLUS_PRIOR = "target-plus-prior"
    FULL = "full"

    @property
    def retained_roles(self) -> frozenset[ClassRole]:
        if self is LabelSetVariant.TARGET_ONLY:
            return frozenset({ClassRole.TARGET})
        if self is LabelSetVariant.TARGET_PLUS_PRIOR:
            return frozenset({ClassRole.TARGET, ClassRole.PRIOR})
        return frozenset({ClassRole.TARGET, ClassRole.PRIOR, ClassRole.POST})


@dataclass(frozen=True)
class ClassEntry:
    class_id: int
    name: str
    role: ClassRole


class ClassVocabulary:
    """Immutable id -> (name, role) table with exactly one target class."""

    def __init__(self, entries):
        entries = tuple(entries)
        ids = [e.class_id for e in entries]
        if ids != list(range(len(entries))):
            raise ValidationError(f"class ids must be contiguous from 0, got {ids}")
        names = [e.name for e in entries]
        if len(set(names)) != len(names):
            raise ValidationError(f"duplicate class names in {names}")
        targets = [e for e in entries if e.role is ClassRole.TARGET]
        if len(targets) != 1:
            raise ValidationError(
                f"vocabulary must have exactly one target class, got {len(targets)}"
            )
        self._entries = entries
        self._by_name = {e.name: e for e in entries}

    def __len__(self):
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    def __eq__(self, other):
        return isinstance(other, ClassVocabulary) and self._entries == other._entries

    def __contains__(self, class_id: int) -> bool:
        return 0 <= class_id < len(self._entries)

    def entry(self, class_id: int) -> ClassEntry:
        if class_id not in self:
            raise UnknownClass(f"class id {class_id} not in vocabulary of size {len(self)}")
        return self._entries[class_id]

    def by_name(self, name: str) -> ClassEntry:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownClass(f"no class named {name!r}") from None

    def role_of(self, class_id: int) -> ClassRole:
        return self.entry(class_id).role

    @property
    def target_id(self) -> int:
        return next(e.class_id for e in self._entries if e.role is ClassRole.TARGET)

    def ids_with_role(self, role: ClassRole) -> list[int]:
        return [e.class_id for e in self._entries if e.role is role]

    def to_json(self):
        return [{"id": e.class_id, "name": e.name, "role": e.role.value}
                for e in self._entries]

    @classmethod
    def from_json(cls, data) -> "ClassVocabulary":
        try:
            entries = [ClassEntry(int(d["id"]), str(d["name"]), ClassRole(d["role"]))
                       for d in data]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed vocabulary entry: {exc}") from exc
        return cls(entries)


ANATOMY_STRUCTURES = ("clavicle", "scapula", "lung", "hilum", "heart",
                      "aorta", "diaphragm", "mediastinum", "trachea", "spine")


def default_vocabulary() -> ClassVocabulary:
    """Target nodule class, ten anatomy prior classes, one mined fp class."""
    entries = [ClassEntry(0, "nodule", ClassRole.TARGET)]
    entries += [ClassEntry(i + 1, name, ClassRole.PRIOR)
                for i, name in enumerate(ANATOMY_STRUCTURES)]
    entries.append(ClassEntry(len(entries), "fp", ClassRole.POST))
    return ClassVocabulary(entries)


@dataclass(frozen=True)
class GroundTruthObject:
    class_id: int
    box: NormalizedBBox


@dataclass(frozen=True)
class Detection:
    class_id: int
    confidence: float
    box: NormalizedBBox

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValidationError(f"confidence {self.confidence} outside [0, 1]")


def _format_coords(box: NormalizedBBox) -> str:
    return f"{box.cx:.6f} {box.cy:.6f} {box.w:.6f} {box.h:.6f}"


def format_label_line(obj: GroundTruthObject) -> str:
    return f"{obj.class_id} {_format_coords(obj.box)}"


def format_prediction_line(det: Detection) -> str:
    return f"{det.class_id} {det.confidence:.6f} {_format_coords(det.box)}"


def _parse_line(tokens, n_fields, path, line_no):
    if len(tokens) != n_fields:
        raise ParseError(f"expected {n_fields} fields, got {len(tokens)}",
                         path=path, line=line_no)
    try:
        class_id = int(tokens[0])
    except ValueError:
        raise ParseError(f"class id {tokens[0]!r} is not an integer",
                         path=path, line=line_no) from None
    try:
        values = [float(t) for t in tokens[1:]]
    except ValueError as exc:
        raise ParseError(str(exc), path=path, line=line_no) from None
    return class_id, values


def _check_class(class_id, vocabulary, path, line_no):
    if vocabulary is not None and class_id not in vocabulary:
        raise UnknownClass(
            f"{path}: class id {class_id} not in vocabulary (line {line_no})"
        )


def _make_box(values, path, line_no):
    try:
        return NormalizedBBox(*values)
    except InvalidBox as exc:
        raise InvalidBox(f"{path}: {exc} (line {line_no})") from None


def load_labels(path, vocabulary: ClassVocabulary | None = None) -> list[GroundTruthObject]:
    """Parse a ground-truth label file.

    Args:
        path: label file, one ``<class_id> <cx> <cy> <w> <h>`` line per box.
        vocabulary: when given, class ids are checked for membership.

    Raises:
        ParseError, UnknownClass, InvalidBox with the offending line number.
    """
    objects = []
    with open(path, "r", encoding="ascii") as fh:
        for line_no, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens:
                continue
            class_id, values = _parse_line(tokens, 5, path, line_no)
            _check_class(class_id, vocabulary, path, line_no)
            objects.append(GroundTruthObject(class_id, _make_box(values, path, line_no)))
    return objects


def save_labels(objects, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for obj in objects:
            fh.write(format_label_line(obj) + "\n")


def load_predictions(path, vocabulary: ClassVocabulary | None = None) -> list[Detection]:
    """Parse a prediction file of ``<class_id> <confidence> <cx> <cy> <w> <h>`` lines."""
    detections = []
    with open(path, "r", encoding="ascii") as fh:
        for line_no, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens:
                continue
            class_id, values = _parse_line(tokens, 6, path, line_no)
            _check_class(class_id, vocabulary, path, line_no)
            confidence = values[0]
            if not 0.0 <= confidence <= 1.0:
                raise ParseError(f"confidence {confidence} outside [0, 1]",
                                 path=path, line=line_no)
            detections.append(Detection(class_id, confidence,
                                        _make_box(values[1:], path, line_no)))
    return detections


def save_predictions(detections, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for det in detections:
            fh.write(format_prediction_line(det) + "\n")


@dataclass(frozen=True)
class ImageRecord:
    image_id: str
    width: int
    height: int
    split: str
    labels: str
    masks: tuple[tuple[str, str], ...] = ()  # (structure name, relpath) pairs
    predictions: str | None = None

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ValidationError(f"split {self.split!r} must be one of {SPLITS}")
        if self.width <= 0 or self.height <= 0:
            raise ValidationError(f"image size {self.width}x{self.height} must be positive")

    def mask_map(self) -> dict[str, str]:
        return dict(self.masks)


@dataclass
class DatasetManifest:
    """Images, splits, vocabulary, and relative paths to per-image files."""

    vocabulary: ClassVocabulary
    images: list[ImageRecord]
    root: Path
    scene: str | None = None

    def resolve(self, relpath: str) -> Path:
        return self.root / relpath

    def split(self, name: str) -> list[ImageRecord]:
        if name not in SPLITS:
            raise ValidationError(f"unknown split {name!r}")
        return [im for im in self.images if im.split == name]

    def image(self, image_id: str) -> ImageRecord:
        for im in self.images:
            if im.image_id == image_id:
                return im
        raise ValidationError(f"no image with id {image_id!r}")

    def to_json(self):
        images = []
        for im in self.images:
            record = {
                "id": im.image_id,
                "width": im.width,
                "height": im.height,
                "split": im.split,
                "labels": im.labels,
            }
            if im.masks:
                record["masks"] = {name: rel for name, rel in im.masks}
            if im.predictions is not None:
                record["predictions"] = im.predictions
            images.append(record)
        doc = {
            "format": MANIFEST_FORMAT,
            "version": MANIFEST_VERSION,
            "vocabulary": self.vocabulary.to_json(),
            "images": images,
        }
        if self.scene is not None:
            doc["scene"] = self.scene
        return doc


def manifest_to_text(manifest: DatasetManifest) -> str:
    return json.dumps(manifest.to_json(), indent=2) + "\n"


def save_manifest(manifest: DatasetManifest, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(manifest_to_text(manifest))


def _manifest_from_json(doc, root: Path) -> DatasetManifest:
    if not isinstance(doc, dict) or doc.get("format") != MANIFEST_FORMAT:
        raise ValidationError(f"not a {MANIFEST_FORMAT} document")
    if doc.get("version") != MANIFEST_VERSION:
        raise ValidationError(f"unsupported manifest version {doc.get('version')!r}")
    vocabulary = ClassVocabulary.from_json(doc.get("vocabulary", []))
    images = []
    seen = set()
    for record in doc.get("images", []):
        try:
            image = ImageRecord(
                image_id=str(record["id"]),
                width=int(record["width"]),
                height=int(record["height"]),
                split=str(record["split"]),
                labels=str(record["labels"]),
                masks=tuple(sorted((str(k), str(v))
                                   for k, v in record.get("masks", {}).items())),
                predictions=(str(record["predictions"])
                             if "predictions" in record else None),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed image record: {exc}") from exc
        if image.image_id in seen:
            raise ValidationError(f"duplicate image id {image.image_id!r}")
        seen.add(image.image_id)
        images.append(image)
    return DatasetManifest(vocabulary=vocabulary, images=images, root=root,
                           scene=doc.get("scene"))


def load_manifest(path, check_paths: bool = True) -> DatasetManifest:
    """Load a manifest JSON document.

    Args:
        path: manifest file; relative paths resolve against its directory.
        check_paths: when True (default), every referenced file must exist.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}", path=path) from exc
    manifest = _manifest_from_json(doc, path.parent)
    if check_paths:
        missing = [rel for rel in _referenced_paths(manifest)
                   if not manifest.resolve(rel).exists()]
        if missing:
            raise ValidationError(
                f"{path}: {len(missing)} referenced file(s) missing, first: {missing[0]}"
            )
    return manifest


def _referenced_paths(manifest: DatasetManifest):
    for im in manifest.images:
        yield im.labels
        for _, rel in im.masks:
            yield rel
        if im.predictions is not None:
            yield im.predictions
    if manifest.scene is not None:
        yield manifest.scene


# ---------------------------------------------------------------------------
# Validation report


@dataclass(frozen=True)
class Finding:
    severity: str  # "error" | "warning"
    code: str
    message: str
    image_id: str | None = None


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    def add(self, severity, code, message, image_id=None):
        self.findings.append(Finding(severity, code, message, image_id))

    @property
    def errors(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == "error"]

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_json(self):
        return {
            "ok": self.ok,
            "findings": [
                {"severity": f.severity, "code": f.code, "message": f.message,
                 **({"image": f.image_id} if f.image_id else {})}
                for f in self.findings
            ],
        }


def validate_manifest(path) -> ValidationReport:
    """Check a manifest and every file it references; findings are data.

    Reports duplicate image ids, missing files, malformed label or
    prediction lines, out-of-range boxes, unknown class ids, and
    vocabulary role violations. Never raises on bad data.
    """
    report = ValidationReport()
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        report.add("error", "unreadable-manifest", str(exc))
        return report

    try:
        vocabulary = ClassVocabulary.from_json(doc.get("vocabulary", []))
    except ValidationError as exc:
        report.add("error", "role-violation", str(exc))
        vocabulary = None

    seen_ids = set()
    records = doc.get("images", []) if isinstance(doc, dict) else []
    for record in records:
        image_id = str(record.get("id", "?"))
        if image_id in seen_ids:
            report.add("error", "duplicate-id", f"image id {image_id!r} appears twice",
                       image_id)
            continue
        seen_ids.add(image_id)
        try:
            split = str(record["split"])
            if split not in SPLITS:
                report.add("error", "bad-split", f"split {split!r} unknown", image_id)
        except KeyError:
            report.add("error", "bad-record", "image record missing split", image_id)
        rels = [("labels", record.get("labels"))]
        rels += [("mask", rel) for rel in record.get("masks", {}).values()]
        if "predictions" in record:
            rels.append(("predictions", record["predictions"]))
        for kind, rel in rels:
            if rel is None:
                report.add("error", "bad-record", f"image record missing {kind}",
                           image_id)
                continue
            full = path.parent / rel
            if not full.exists():
                report.add("error", "missing-file", f"{kind} file {rel} not found",
                           image_id)
            elif kind in ("labels", "predictions"):
                loader = load_labels if kind == "labels" else load_predictions
                try:
                    loader(full, vocabulary)
                except ParseError as exc:
                    report.add("error", "parse-error", str(exc), image_id)
                except UnknownClass as exc:
                    report.add("error", "unknown-class", str(exc), image_id)
                except InvalidBox as exc:
                    report.add("error", "invalid-box", str(exc), image_id)
    return report


# ---------------------------------------------------------------------------
# Label-set pipelines


@dataclass(frozen=True)
class ExtractConfig:
    """Connected-component extraction settings for prior-label building.

    min_area defaults to 8 pixels to suppress segmentation speckle.
    """

    connectivity: int = 8
    min_area: int = 8

    def __post_init__(self):
        if self.connectivity not in (4, 8):
            raise ValidationError(f"connectivity must be 4 or 8, got {self.connectivity}")
        if self.min_area < 1:
            raise ValidationError(f"min_area must be >= 1, got {self.min_area}")


def _read_label_lines(path) -> list[str]:
    with open(path, "r", encoding="ascii") as fh:
        return [line.rstrip("\n") for line in fh if line.strip()]


def _write_lines(lines, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")


def _relpath(target: Path, new_root: Path) -> str:
    return os.path.relpath(target, new_root).replace(os.sep, "/")


@dataclass
class UpriorReport:
    images: int = 0
    masks_used: int = 0
    masks_missing: int = 0
    boxes_added: int = 0
    boxes_per_structure: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "images": self.images,
            "masks_used": self.masks_used,
            "masks_missing": self.masks_missing,
            "boxes_added": self.boxes_added,
            "boxes_per_structure": dict(sorted(self.boxes_per_structure.items())),
        }


def build_uprior(manifest: DatasetManifest, mask_dir, out_dir,
                 config: ExtractConfig = ExtractConfig()) -> tuple[DatasetManifest, UpriorReport]:
    """Derive anatomy prior labels from structure masks and merge them in.

    For every image and every prior-role structure, looks for a mask named
    ``<image_id>_<structure>.pgm`` under ``mask_dir``, extracts one box per
    connected component, and appends those boxes (with the structure's
    class id) to the image's existing label lines. Existing lines are
    copied verbatim, so target labels are byte-identical before and after.

    Missing masks are counted as warnings; a mask whose size disagrees
    with the manifest raises DimensionMismatch.

    Returns the derived manifest (rooted at ``out_dir``) and a build report.
    """
    mask_dir = Path(mask_dir)
    out_dir = Path(out_dir)
    labels_dir = out_dir / "labels"
    labels_dir.mkdir(parents=True, exist_ok=True)
    report = UpriorReport()
    prior_entries = [manifest.vocabulary.entry(i)
                     for i in manifest.vocabulary.ids_with_role(ClassRole.PRIOR)]
    new_images = []
    for image in manifest.images:
        lines = _read_label_lines(manifest.resolve(image.labels))
        mask_refs = []
        for entry in prior_entries:
            mask_path = mask_dir / f"{image.image_id}_{entry.name}.pgm"
            if not mask_path.exists():
                report.masks_missing += 1
                continue
            mask = read_mask(mask_path)
            if (mask.width, mask.height) != (image.width, image.height):
                raise DimensionMismatch(
                    f"{mask_path}: mask is {mask.width}x{mask.height}, "
                    f"image {image.image_id} is {image.width}x{image.height}"
                )
            report.masks_used += 1
            mask_refs.append((entry.name, _relpath(mask_path, out_dir)))
            for box in components_from_mask(mask, config.connectivity, config.min_area):
                norm = normalize(box, image.width, image.height)
                lines.append(format_label_line(GroundTruthObject(entry.class_id, norm)))
                report.boxes_added += 1
                report.boxes_per_structure[entry.name] = \
                    report.boxes_per_structure.get(entry.name, 0) + 1
        rel = f"labels/{image.image_id}.txt"
        _write_lines(lines, out_dir / rel)
        new_images.append(ImageRecord(
            image_id=image.image_id, width=image.width, height=image.height,
            split=image.split, labels=rel, masks=tuple(mask_refs),
            predictions=(_relpath(manifest.resolve(image.predictions), out_dir)
                         if image.predictions else None),
        ))
        report.images += 1
    scene = (_relpath(manifest.resolve(manifest.scene), out_dir)
             if manifest.scene else None)
    derived = DatasetManifest(vocabulary=manifest.vocabulary, images=new_images,
                              root=out_dir, scene=scene)
    save_manifest(derived, out_dir / "manifest.json")
    return derived, report


def compose(manifest: DatasetManifest, variant: LabelSetVariant,
            out_dir) -> tuple[DatasetManifest, dict[int, int]]:
    """Filter labels to a variant's roles and remap class ids contiguously.

    The remapped vocabulary is order-stable: target first, then prior
    classes by original id, then post classes, so the target class is id 0
    in every variant. Prediction files, when referenced, are filtered and
    remapped the same way. Returns the derived manifest and the
    old-id -> new-id table (also written to ``remap.json``).
    """
    out_dir = Path(out_dir)
    roles = variant.retained_roles
    ordered = [e for e in manifest.vocabulary if e.role is ClassRole.TARGET]
    ordered += [e for e in manifest.vocabulary if e.role is ClassRole.PRIOR]
    ordered += [e for e in manifest.vocabulary if e.role is ClassRole.POST]
    retained = [e for e in ordered if e.role in roles]
    remap = {e.class_id: new_id for new_id, e in enumerate(retained)}
    new_vocab = ClassVocabulary(
        [ClassEntry(new_id, e.name, e.role) for new_id, e in enumerate(retained)]
    )

    def rewrite(lines):
        kept = []
        for line in lines:
            first, _, rest = line.partition(" ")
            old_id = int(first)
            if old_id not in manifest.vocabulary:
                raise UnknownClass(f"class id {old_id} not in vocabulary")
            if old_id in remap:
                kept.append(f"{remap[old_id]} {rest}")
        return kept

    (out_dir / "labels").mkdir(parents=True, exist_ok=True)
    new_images = []
    for image in manifest.images:
        rel = f"labels/{image.image_id}.txt"
        _write_lines(rewrite(_read_label_lines(manifest.resolve(image.labels))),
                     out_dir / rel)
        pred_rel = None
        if image.predictions is not None:
            pred_rel = f"predictions/{image.image_id}.txt"
            (out_dir / "predictions").mkdir(parents=True, exist_ok=True)
            pred_lines = _read_label_lines(manifest.resolve(image.predictions))
            _write_lines(rewrite(pred_lines), out_dir / pred_rel)
        new_images.append(ImageRecord(
            image_id=image.image_id, width=image.width, height=image.height,
            split=image.split, labels=rel, masks=(), predictions=pred_rel,
        ))
    scene_rel = None
    if manifest.scene is not None:
        scene_rel = "scene.json"
        (out_dir / scene_rel).write_bytes(manifest.resolve(manifest.scene).read_bytes())
    derived = DatasetManifest(vocabulary=new_vocab, images=new_images,
                              root=out_dir, scene=scene_rel)
    save_manifest(derived, out_dir / "manifest.json")
    with open(out_dir / "remap.json", "w", encoding="ascii", newline="\n") as fh:
        json.dump({str(k): v for k, v in remap.items()}, fh, indent=2)
        fh.write("\n")
    return derived, remap


def merge_labels(manifest: DatasetManifest, extra_dir, out_dir) -> DatasetManifest:
    """Append per-image label lines from ``extra_dir`` to the manifest's labels.

    Used to fold a mined false-positive label set into the prior label set.
    Original lines are copied verbatim; images without an extra file are
    copied unchanged.
    """
    extra_dir = Path(extra_dir)
    out_dir = Path(out_dir)
    (out_dir / "labels").mkdir(parents=True, exist_ok=True)
    new_images = []
    for image in manifest.images:
        lines = _read_label_lines(manifest.resolve(image.labels))
        extra = extra_dir / f"{image.image_id}.txt"
        if extra.exists():
            lines += _read_label_lines(extra)
        rel = f"labels/{image.image_id}.txt"
        _write_lines(lines, out_dir / rel)
        new_images.append(ImageRecord(
            image_id=image.image_id, width=image.width, height=image.height,
            split=image.split, labels=rel,
            masks=tuple((name, _relpath(manifest.resolve(r), out_dir))
                        for name, r in image.masks),
            predictions=(_relpath(manifest.resolve(image.predictions), out_dir)
                         if image.predictions else None),
        ))
    scene = (_relpath(manifest.resolve(manifest.scene), out_dir)
             if manifest.scene else None)
    derived = DatasetManifest(vocabulary=manifest.vocabulary, images=new_images,
                              root=out_dir, scene=scene)
    save_manifest(derived, out_dir / "manifest.json")
    return derived


def attach_predictions(manifest: DatasetManifest, pred_dir, out_path=None) -> DatasetManifest:
    """Return a manifest whose images reference ``<pred_dir>/<image_id>.txt``.

    Only images whose prediction file exists get a reference. When
    ``out_path`` is given the updated manifest is saved there and relative
    paths are rewritten against its directory.
    """
    pred_dir = Path(pred_dir)
    root = Path(out_path).parent if out_path else manifest.root
    new_images = []
    for image in manifest.images:
        pred = pred_dir / f"{image.image_id}.txt"
        new_images.append(ImageRecord(
            image_id=image.image_id, width=image.width, height=image.height,
            split=image.split,
            labels=_relpath(manifest.resolve(image.labels), root),
            masks=tuple((name, _relpath(manifest.resolve(rel), root))
                        for name, rel in image.masks),
            predictions=_relpath(pred, root) if pred.exists() else None,
        ))
    scene = (_relpath(manifest.resolve(manifest.scene), root)
             if manifest.scene else None)
    derived = DatasetManifest(vocabulary=manifest.vocabulary, images=new_images,
                              root=root, scene=scene)
    if out_path:
        save_manifest(derived, out_path)
    return derived


def load_split_samples(manifest: DatasetManifest, split: str,
                       require_predictions: bool = True):
    """Load (image, truths, detections) triples for one split.

    Raises MissingPredictions listing uncovered image ids when
    ``require_predictions`` is set and any image lacks a prediction file.
    """
    from .errors import MissingPredictions

    images = manifest.split(split)
    missing = [im.image_id for im in images if im.predictions is None]
    if missing and require_predictions:
        raise MissingPredictions(missing)
    samples = []
    for im in images:
        truths = load_labels(manifest.resolve(im.labels), manifest.vocabulary)
        if im.predictions is None:
            detections = []
        else:
            detections = load_predictions(manifest.resolve(im.predictions),
                                          manifest.vocabulary)
        samples.append((im, truths, detections))
    return samples
