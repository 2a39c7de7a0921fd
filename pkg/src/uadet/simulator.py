"""Deterministic synthetic scenes and a parametric detector model.

This is the desk-scale stand-in for a private dataset plus GPU training.
Scenes contain three entity families: target nodules, ten anatomy
structures laid out at canonical chest positions (rendered to graymap
masks so the prior-label builder has real input), and confounders --
vessel-crossing-like distractors that appear in no label set.

A detector profile models trained *behavior*, not learning: the label-set
variant it was "trained on" decides which entity classes it can emit.
In-vocabulary entities are detected with a hit rate at high confidence;
nodule-like entities outside the vocabulary (confounders, and the hilum
for the nodule-only variant) are emitted as mid-confidence nodule
detections with probability ``confusion_prob``; background noise adds
low-confidence nodule boxes. Removing a knowledge gap therefore removes
mid-confidence nodule false positives, which is exactly the mechanism the
policy experiment measures via FROC and entropy.

Every random draw comes from a per-(seed, image, entity) counter-based
stream, so the three variant detectors see identical worlds and identical
dice: their outputs differ only through vocabulary knowledge.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import dataset as ds
from .dataset import (
    ClassRole,
    DatasetManifest,
    Detection,
    GroundTruthObject,
    ImageRecord,
    LabelSetVariant,
    default_vocabulary,
)
from .errors import ConfigError, ValidationError
from .geometry import NormalizedBBox, PixelMask, write_mask
from .matching import MatchConfig
from .metrics import EvalConfig, evaluate_split
from .mining import count_training_fps, mine_upost
from .rng import Stream, stream

# Stream derivation namespaces (documented in docs/rng.md).
NS_SCENE = 0
NS_DETECT = 1
# Per-image scene purposes.
P_COUNTS = 0
P_ANATOMY = 1
P_NODULES = 2
P_CONFOUNDERS = 3


@dataclass(frozen=True)
class ComponentSpec:
    cx: float
    cy: float
    w: float
    h: float
    shape: str  # "ellipse" | "rect"


@dataclass(frozen=True)
class StructureSpec:
    name: str
    components: tuple[ComponentSpec, ...]
    nodule_like: bool = False


# Canonical chest layout in image fractions: bilateral structures get two
# components. Only geometric plausibility matters; visual realism is a
# non-goal. Components of one structure keep clear gaps so jitter cannot
# merge them into a single connected blob.
CANONICAL_LAYOUT: tuple[StructureSpec, ...] = (
    StructureSpec("clavicle", (ComponentSpec(0.30, 0.12, 0.26, 0.06, "rect"),
                               ComponentSpec(0.70, 0.12, 0.26, 0.06, "rect"))),
    StructureSpec("scapula", (ComponentSpec(0.13, 0.32, 0.14, 0.26, "ellipse"),
                              ComponentSpec(0.87, 0.32, 0.14, 0.26, "ellipse"))),
    StructureSpec("lung", (ComponentSpec(0.30, 0.46, 0.32, 0.52, "ellipse"),
                           ComponentSpec(0.70, 0.46, 0.32, 0.52, "ellipse"))),
    StructureSpec("hilum", (ComponentSpec(0.40, 0.46, 0.10, 0.14, "ellipse"),
                            ComponentSpec(0.60, 0.46, 0.10, 0.14, "ellipse")),
                  nodule_like=True),
    StructureSpec("heart", (ComponentSpec(0.45, 0.64, 0.28, 0.24, "ellipse"),)),
    StructureSpec("aorta", (ComponentSpec(0.53, 0.36, 0.10, 0.22, "rect"),)),
    StructureSpec("diaphragm", (ComponentSpec(0.28, 0.82, 0.28, 0.10, "ellipse"),
                                ComponentSpec(0.72, 0.82, 0.28, 0.10, "ellipse"))),
    StructureSpec("mediastinum", (ComponentSpec(0.50, 0.52, 0.16, 0.40, "rect"),)),
    StructureSpec("trachea", (ComponentSpec(0.50, 0.15, 0.06, 0.18, "rect"),)),
    StructureSpec("spine", (ComponentSpec(0.50, 0.55, 0.10, 0.66, "rect"),)),
)


@dataclass(frozen=True)
class SceneConfig:
    """Synthetic dataset shape; same config + seed always gives the same bytes."""

    image_size: int = 512
    train_images: int = 200
    val_images: int = 50
    nodules_per_image: float = 1.0
    confounder_rate: float = 2.5
    nodule_size: tuple[float, float] = (0.045, 0.09)  # fractions of image size
    confounder_size: tuple[float, float] = (0.04, 0.085)
    placement_margin: float = 0.14
    anatomy_jitter: float = 0.02
    size_jitter: float = 0.05
    seed: int = 42

    def validate(self) -> None:
        if self.image_size < 16:
            raise ConfigError(f"image_size {self.image_size} too small to rasterize")
        if self.train_images < 1 or self.val_images < 1:
            raise ConfigError("both splits need at least one image")
        if self.nodules_per_image < 0 or self.confounder_rate < 0:
            raise ConfigError("entity rates must be >= 0")
        for name, (lo, hi) in (("nodule", self.nodule_size),
                               ("confounder", self.confounder_size)):
            if not 0 < lo <= hi:
                raise ConfigError(f"{name}_size range ({lo}, {hi}) is invalid")
            if hi >= 1.0:
                raise ConfigError(f"{name} entities larger than the image")
            if self.placement_margin < hi / 2:
                raise ConfigError(
                    f"placement_margin {self.placement_margin} cannot contain "
                    f"{name} boxes up to {hi}"
                )
        if not 0 <= self.anatomy_jitter < 0.1 or not 0 <= self.size_jitter < 0.5:
            raise ConfigError("jitter values out of range")
        for spec in CANONICAL_LAYOUT:
            for comp in spec.components:
                half_w = comp.w / 2 * (1 + self.size_jitter)
                half_h = comp.h / 2 * (1 + self.size_jitter)
                if (comp.cx - half_w - self.anatomy_jitter < 0.005
                        or comp.cx + half_w + self.anatomy_jitter > 0.995
                        or comp.cy - half_h - self.anatomy_jitter < 0.005
                        or comp.cy + half_h + self.anatomy_jitter > 0.995):
                    raise ConfigError(
                        f"jitter can push {spec.name} outside the image"
                    )

    def to_json(self):
        return {
            "image_size": self.image_size,
            "train_images": self.train_images,
            "val_images": self.val_images,
            "nodules_per_image": self.nodules_per_image,
            "confounder_rate": self.confounder_rate,
            "nodule_size": list(self.nodule_size),
            "confounder_size": list(self.confounder_size),
            "placement_margin": self.placement_margin,
            "anatomy_jitter": self.anatomy_jitter,
            "size_jitter": self.size_jitter,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, doc) -> "SceneConfig":
        kwargs = dict(doc)
        for key in ("nodule_size", "confounder_size"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(f"bad scene config: {exc}") from exc


@dataclass(frozen=True)
class ShapeParams:
    """Kumaraswamy shape pair for a bounded confidence distribution."""

    a: float
    b: float

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ConfigError(f"shape parameters must be positive: {self.a}, {self.b}")


@dataclass(frozen=True)
class DetectorProfile:
    """Behavioral stand-in for a detector trained on one label-set variant."""

    variant: LabelSetVariant
    hit_rate: float = 0.92
    confusion_prob: float = 0.9
    tp_conf: ShapeParams = ShapeParams(5.0, 2.0)
    confusion_conf: ShapeParams = ShapeParams(4.0, 8.0)
    background_rate: float = 24.0
    background_conf: ShapeParams = ShapeParams(1.0, 16.0)
    background_size: tuple[float, float] = (0.03, 0.08)
    box_jitter: float = 0.12

    def __post_init__(self):
        for name in ("hit_rate", "confusion_prob"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} {value} outside [0, 1]")
        if self.background_rate < 0:
            raise ConfigError("background_rate must be >= 0")
        if not 0.0 <= self.box_jitter < 0.5:
            raise ConfigError("box_jitter out of range")

    def to_json(self):
        return {
            "variant": self.variant.value,
            "hit_rate": self.hit_rate,
            "confusion_prob": self.confusion_prob,
            "tp_conf": [self.tp_conf.a, self.tp_conf.b],
            "confusion_conf": [self.confusion_conf.a, self.confusion_conf.b],
            "background_rate": self.background_rate,
            "background_conf": [self.background_conf.a, self.background_conf.b],
            "background_size": list(self.background_size),
            "box_jitter": self.box_jitter,
        }


def default_profiles() -> dict[LabelSetVariant, DetectorProfile]:
    """The three ablation detectors: identical dice, different vocabularies."""
    return {variant: DetectorProfile(variant=variant) for variant in LabelSetVariant}


@dataclass(frozen=True)
class Entity:
    kind: str  # "nodule" | "anatomy" | "confounder"
    structure: str | None
    nodule_like: bool
    box: NormalizedBBox

    def to_json(self):
        return {
            "kind": self.kind,
            "structure": self.structure,
            "nodule_like": self.nodule_like,
            "box": [self.box.cx, self.box.cy, self.box.w, self.box.h],
        }


@dataclass(frozen=True)
class SceneImage:
    image_id: str
    split: str
    entities: tuple[Entity, ...]


@dataclass
class Scene:
    seed: int
    image_size: int
    images: list[SceneImage]

    def to_json(self):
        return {
            "seed": self.seed,
            "image_size": self.image_size,
            "images": [
                {"id": im.image_id, "split": im.split,
                 "entities": [e.to_json() for e in im.entities]}
                for im in self.images
            ],
        }


def save_scene(scene: Scene, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(scene.to_json(), fh, indent=2)
        fh.write("\n")


def load_scene(path) -> Scene:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    images = []
    for im in doc["images"]:
        entities = tuple(
            Entity(e["kind"], e["structure"], e["nodule_like"],
                   NormalizedBBox(*e["box"]))
            for e in im["entities"]
        )
        images.append(SceneImage(im["id"], im["split"], entities))
    return Scene(seed=doc["seed"], image_size=doc["image_size"], images=images)


# ---------------------------------------------------------------------------
# Scene generation


def _jittered_component(comp: ComponentSpec, rng: Stream, config: SceneConfig):
    dx = rng.uniform(-config.anatomy_jitter, config.anatomy_jitter)
    dy = rng.uniform(-config.anatomy_jitter, config.anatomy_jitter)
    sw = rng.uniform(1 - config.size_jitter, 1 + config.size_jitter)
    sh = rng.uniform(1 - config.size_jitter, 1 + config.size_jitter)
    return NormalizedBBox(comp.cx + dx, comp.cy + dy, comp.w * sw, comp.h * sh)


def _place_blob(rng: Stream, size_range, margin):
    lo, hi = size_range
    cx = rng.uniform(margin, 1 - margin)
    cy = rng.uniform(margin, 1 - margin)
    w = rng.uniform(lo, hi)
    h = rng.uniform(lo, hi)
    return NormalizedBBox(cx, cy, w, h)


def _scene_image(config: SceneConfig, index: int, image_id: str, split: str):
    g = stream(config.seed, NS_SCENE, index)
    counts = g.child(P_COUNTS)
    n_nodules = counts.poisson(config.nodules_per_image)
    n_confounders = counts.poisson(config.confounder_rate)

    entities = []
    anatomy = g.child(P_ANATOMY)
    for s_index, spec in enumerate(CANONICAL_LAYOUT):
        comp_rng = anatomy.child(s_index)
        for comp in spec.components:
            entities.append(Entity("anatomy", spec.name, spec.nodule_like,
                                   _jittered_component(comp, comp_rng, config)))
    nodules = g.child(P_NODULES)
    for _ in range(n_nodules):
        entities.append(Entity("nodule", None, False,
                               _place_blob(nodules, config.nodule_size,
                                           config.placement_margin)))
    confounders = g.child(P_CONFOUNDERS)
    for _ in range(n_confounders):
        entities.append(Entity("confounder", None, True,
                               _place_blob(confounders, config.confounder_size,
                                           config.placement_margin)))
    return SceneImage(image_id, split, tuple(entities))


def render_component(arr: np.ndarray, box: NormalizedBBox, shape: str) -> None:
    """Rasterize one component into a (size, size) uint8 grid, in place."""
    size = arr.shape[0]
    x0, y0, x1, y1 = box.to_xyxy()
    c0, c1 = int(round(x0 * size)), int(round(x1 * size))
    r0, r1 = int(round(y0 * size)), int(round(y1 * size))
    c0, r0 = max(c0, 0), max(r0, 0)
    c1, r1 = min(c1, size), min(r1, size)
    if c1 <= c0 or r1 <= r0:
        return
    if shape == "rect":
        arr[r0:r1, c0:c1] = 255
        return
    # ellipse inscribed in the rounded pixel box, tested at pixel centers
    rx, ry = (c1 - c0) / 2.0, (r1 - r0) / 2.0
    cx, cy = c0 + rx, r0 + ry
    yy, xx = np.ogrid[r0:r1, c0:c1]
    inside = (((xx + 0.5 - cx) / rx) ** 2 + ((yy + 0.5 - cy) / ry) ** 2) <= 1.0
    arr[r0:r1, c0:c1][inside] = 255


def render_structure_mask(image: SceneImage, structure: str,
                          image_size: int) -> PixelMask:
    """All of one structure's components rasterized into a single mask."""
    specs = {s.name: s for s in CANONICAL_LAYOUT}
    arr = np.zeros((image_size, image_size), dtype=np.uint8)
    components = [e for e in image.entities
                  if e.kind == "anatomy" and e.structure == structure]
    spec = specs[structure]
    for entity, comp in zip(components, spec.components):
        render_component(arr, entity.box, comp.shape)
    return PixelMask.from_array(arr)


def generate_dataset(config: SceneConfig, out_dir,
                     workers: int = 1) -> tuple[DatasetManifest, Scene]:
    """Write a full synthetic dataset: labels, masks, scene record, manifest.

    Layout under ``out_dir``: ``labels/<id>.txt`` (nodule ground truth),
    ``masks/<id>_<structure>.pgm`` (anatomy masks for the prior builder),
    ``scene.json`` (every entity, confounders included), ``manifest.json``.
    The train/val split is by image count from the config (8:2 by default).
    """
    config.validate()
    out_dir = Path(out_dir)
    (out_dir / "labels").mkdir(parents=True, exist_ok=True)
    (out_dir / "masks").mkdir(parents=True, exist_ok=True)

    total = config.train_images + config.val_images
    ids_splits = [(f"img_{i:05d}", "train" if i < config.train_images else "val")
                  for i in range(total)]

    def build_one(args):
        index, (image_id, split) = args
        image = _scene_image(config, index, image_id, split)
        nodules = [GroundTruthObject(0, e.box) for e in image.entities
                   if e.kind == "nodule"]
        ds.save_labels(nodules, out_dir / "labels" / f"{image_id}.txt")
        mask_refs = []
        for spec in CANONICAL_LAYOUT:
            mask = render_structure_mask(image, spec.name, config.image_size)
            rel = f"masks/{image_id}_{spec.name}.pgm"
            write_mask(mask, out_dir / rel)
            mask_refs.append((spec.name, rel))
        record = ImageRecord(
            image_id=image_id, width=config.image_size, height=config.image_size,
            split=split, labels=f"labels/{image_id}.txt", masks=tuple(mask_refs),
        )
        return image, record

    tasks = list(enumerate(ids_splits))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(build_one, tasks))
    else:
        results = [build_one(t) for t in tasks]

    scene = Scene(seed=config.seed, image_size=config.image_size,
                  images=[image for image, _ in results])
    save_scene(scene, out_dir / "scene.json")
    manifest = DatasetManifest(
        vocabulary=default_vocabulary(),
        images=[record for _, record in results],
        root=out_dir,
        scene="scene.json",
    )
    ds.save_manifest(manifest, out_dir / "manifest.json")
    return manifest, scene


# ---------------------------------------------------------------------------
# Detector simulation


def _clamp_box(cx, cy, w, h) -> NormalizedBBox:
    w = min(w, 1.0)
    h = min(h, 1.0)
    cx = min(max(cx, w / 2), 1 - w / 2)
    cy = min(max(cy, h / 2), 1 - h / 2)
    return NormalizedBBox(cx, cy, w, h)


def _jitter_box(box: NormalizedBBox, rng: Stream, scale: float) -> NormalizedBBox:
    dx = rng.uniform(-scale, scale) * box.w
    dy = rng.uniform(-scale, scale) * box.h
    sw = rng.uniform(1 - scale, 1 + scale)
    sh = rng.uniform(1 - scale, 1 + scale)
    return _clamp_box(box.cx + dx, box.cy + dy, box.w * sw, box.h * sh)


def _emission_table(vocabulary, variant: LabelSetVariant):
    """Class ids the simulated detector can emit, by entity semantics."""
    roles = variant.retained_roles
    names = {e.name: e.class_id for e in vocabulary if e.role in roles}
    post_ids = [e.class_id for e in vocabulary
                if e.role is ClassRole.POST and e.role in roles]
    return {
        "target": vocabulary.target_id,
        "structures": names,
        "post": post_ids[0] if post_ids else None,
    }


def _simulate_image(scene_image: SceneImage, image_index: int, seed: int,
                    profile: DetectorProfile, table) -> list[Detection]:
    d = stream(seed, NS_DETECT, image_index)
    detections = []
    target_id = table["target"]
    for e_index, entity in enumerate(scene_image.entities):
        s = d.child(1 + e_index)
        roll = s.random()
        if entity.kind == "nodule":
            emit_class = target_id
        elif entity.kind == "anatomy":
            emit_class = table["structures"].get(entity.structure)
        else:  # confounder: representable only via the mined-fp class
            emit_class = table["post"]

        if emit_class is not None:
            if roll < profile.hit_rate:
                conf = s.kumaraswamy(profile.tp_conf.a, profile.tp_conf.b)
                box = _jitter_box(entity.box, s, profile.box_jitter)
                detections.append(Detection(emit_class, conf, box))
        elif entity.nodule_like:
            if roll < profile.confusion_prob:
                conf = s.kumaraswamy(profile.confusion_conf.a,
                                     profile.confusion_conf.b)
                box = _jitter_box(entity.box, s, profile.box_jitter)
                detections.append(Detection(target_id, conf, box))
        # non-nodule-like entities outside the vocabulary stay silent

    bg = d.child(0)
    lo, hi = profile.background_size
    for _ in range(bg.poisson(profile.background_rate)):
        cx = bg.uniform(0.0, 1.0)
        cy = bg.uniform(0.0, 1.0)
        w = bg.uniform(lo, hi)
        h = bg.uniform(lo, hi)
        conf = bg.kumaraswamy(profile.background_conf.a, profile.background_conf.b)
        detections.append(Detection(target_id, conf, _clamp_box(cx, cy, w, h)))
    return detections


def simulate_detector(profile: DetectorProfile, manifest: DatasetManifest,
                      seed: int, out_dir, scene: Scene | None = None,
                      workers: int = 1) -> DatasetManifest:
    """Write per-image prediction files for a profile over the whole manifest.

    The scene record (from the manifest's sidecar unless passed in) supplies
    the entities; the manifest's vocabulary filtered by the profile's
    variant decides which classes exist for this detector. Identical seeds
    give identical detections entity-by-entity across profiles, so variant
    outputs are directly comparable.
    """
    if scene is None:
        if manifest.scene is None:
            raise ValidationError("manifest has no scene record to simulate from")
        scene = load_scene(manifest.resolve(manifest.scene))
    by_id = {im.image_id: im for im in scene.images}
    table = _emission_table(manifest.vocabulary, profile.variant)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def simulate_one(args):
        index, record = args
        scene_image = by_id.get(record.image_id)
        if scene_image is None:
            raise ValidationError(f"scene record missing image {record.image_id!r}")
        detections = _simulate_image(scene_image, index, seed, profile, table)
        ds.save_predictions(detections, out_dir / f"{record.image_id}.txt")

    tasks = list(enumerate(manifest.images))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(simulate_one, tasks))
    else:
        for task in tasks:
            simulate_one(task)
    return ds.attach_predictions(manifest, out_dir)


# ---------------------------------------------------------------------------
# End-to-end policy experiment


MINING_SWEEP_THRESHOLDS = (0.001, 0.25)


@dataclass
class VariantResult:
    variant: LabelSetVariant
    evaluation: object  # SplitEvaluation
    mined_fp_counts: dict[float, int]

    def to_json(self):
        return {
            "variant": self.variant.value,
            "validation": self.evaluation.to_json(),
            "mined_fp_counts": {format(t, ".9g"): c
                                for t, c in sorted(self.mined_fp_counts.items())},
        }


@dataclass
class ExperimentReport:
    seed: int
    scene_config: SceneConfig
    profiles: dict
    match_config: MatchConfig
    eval_config: EvalConfig
    uprior_report: object
    mining_report: object
    variants: dict  # LabelSetVariant -> VariantResult

    def to_json(self):
        variant_order = [LabelSetVariant.TARGET_ONLY,
                         LabelSetVariant.TARGET_PLUS_PRIOR,
                         LabelSetVariant.FULL]
        return {
            "tool": "uadet",
            "note": ("synthetic-benchmark report; scene and detector defaults "
                     "are toolkit choices, not fitted to any clinical data"),
            "seed": self.seed,
            "scene_config": self.scene_config.to_json(),
            "profiles": {v.value: p.to_json() for v, p in self.profiles.items()},
            "mining": {
                "iou_threshold": self.match_config.iou_threshold,
                "confidence_threshold": self.match_config.confidence_threshold,
                "report": self.mining_report.to_json(),
            },
            "uprior": self.uprior_report.to_json(),
            "variants": [self.variants[v].to_json() for v in variant_order],
        }


def experiment_report_text(report: ExperimentReport) -> str:
    return json.dumps(report.to_json(), indent=2) + "\n"


def run_policy_experiment(scene_config: SceneConfig, out_dir,
                          profiles: dict[LabelSetVariant, DetectorProfile] | None = None,
                          match_config: MatchConfig = MatchConfig(),
                          eval_config: EvalConfig = EvalConfig(),
                          workers: int = 1) -> ExperimentReport:
    """Run the whole uncertainty-aware data pipeline on a synthetic scene.

    Stages: generate the dataset; build prior labels from the rendered
    masks; simulate the prior-variant detector on the training split and
    mine its false positives at the mining confidence threshold; merge
    them into the full label set; compose the three ablation variants;
    simulate each variant's detector (shared seed); evaluate FROC/PR and
    entropy on validation; and sweep mining counts over the calibration
    thresholds. Writes everything under ``out_dir`` plus ``report.json``.
    """
    profiles = profiles or default_profiles()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = scene_config.seed

    base_manifest, scene = generate_dataset(scene_config, out_dir / "dataset",
                                            workers=workers)
    uprior_manifest, uprior_report = ds.build_uprior(
        base_manifest, out_dir / "dataset" / "masks", out_dir / "uprior")

    # Mine the prior-variant detector's training FPs into the fp class.
    miner_profile = profiles[LabelSetVariant.TARGET_PLUS_PRIOR]
    mining_manifest = simulate_detector(
        miner_profile, uprior_manifest, seed,
        out_dir / "mining" / "predictions", scene=scene, workers=workers)
    mining_report = mine_upost(mining_manifest, out_dir / "mining" / "mined",
                               match_config)
    full_manifest = ds.merge_labels(mining_manifest, out_dir / "mining" / "mined",
                                    out_dir / "full")

    variants = {}
    for variant in LabelSetVariant:
        vdir = out_dir / "variants" / variant.value
        composed, _ = ds.compose(full_manifest, variant, vdir)
        profile = profiles[variant]
        with_preds = simulate_detector(profile, composed, seed,
                                       vdir / "predictions", scene=scene,
                                       workers=workers)
        ds.save_manifest(with_preds, vdir / "manifest.json")
        evaluation = evaluate_split(with_preds, "val", eval_config)
        evaluation.write_curves(vdir / "curves", prefix="val_")
        with open(vdir / "evaluation.json", "w", encoding="ascii",
                  newline="\n") as fh:
            json.dump(evaluation.to_json(), fh, indent=2)
            fh.write("\n")
        mined_counts = {}
        (vdir / "mining").mkdir(parents=True, exist_ok=True)
        for threshold in MINING_SWEEP_THRESHOLDS:
            sweep_config = replace(match_config, confidence_threshold=threshold)
            tag = format(threshold, ".9g").replace(".", "p")
            sweep_report = count_training_fps(with_preds, sweep_config)
            sweep_report.write(vdir / "mining" / f"conf_{tag}_report.json",
                               vdir / "mining" / f"conf_{tag}_counts.csv")
            mined_counts[threshold] = sweep_report.fp_total
        variants[variant] = VariantResult(variant, evaluation, mined_counts)

    report = ExperimentReport(
        seed=seed, scene_config=scene_config, profiles=profiles,
        match_config=match_config, eval_config=eval_config,
        uprior_report=uprior_report, mining_report=mining_report,
        variants=variants,
    )
    with open(out_dir / "report.json", "w", encoding="ascii", newline="\n") as fh:
        fh.write(experiment_report_text(report))
    return report
