import json
from pathlib import Path

import pytest

from uadet.dataset import (
    LabelSetVariant,
    load_labels,
    load_manifest,
    load_predictions,
    load_split_samples,
)
from uadet.errors import ConfigError
from uadet.geometry import (
    PixelMask,
    bbox_from_mask,
    components_from_mask,
    denormalize,
    iou,
    mask_iou,
    read_mask,
)
from uadet.matching import MatchConfig, match_detections
from uadet.metrics import entropy_summary, froc_curve, sensitivity_at_fppi
from uadet.simulator import (
    CANONICAL_LAYOUT,
    DetectorProfile,
    SceneConfig,
    default_profiles,
    generate_dataset,
    load_scene,
    render_component,
    render_structure_mask,
    run_policy_experiment,
    simulate_detector,
)

import numpy as np

# Small but representative scene used across this module; the FP counts
# below are the frozen first-run regression values for it.
SMALL = SceneConfig(image_size=96, train_images=12, val_images=4, seed=7)
SMALL_TRAIN_FP_AT_0001 = {"target-only": 314, "full": 269}
SMALL_NODULES = 16
SMALL_CONFOUNDERS = 36


def all_file_bytes(root):
    root = Path(root)
    return {str(p.relative_to(root)): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


class TestSceneConfig:
    def test_defaults_validate(self):
        SceneConfig().validate()

    def test_entity_larger_than_image(self):
        with pytest.raises(ConfigError):
            SceneConfig(nodule_size=(0.5, 1.2)).validate()

    def test_margin_must_contain_entities(self):
        with pytest.raises(ConfigError):
            SceneConfig(placement_margin=0.01).validate()

    def test_anatomy_jitter_bounded(self):
        with pytest.raises(ConfigError):
            SceneConfig(anatomy_jitter=0.09).validate()

    def test_round_trips_through_json(self):
        cfg = SceneConfig(image_size=128, seed=9)
        assert SceneConfig.from_json(cfg.to_json()) == cfg


class TestGenerateDataset:
    def test_same_seed_byte_identical(self, tmp_path):
        generate_dataset(SMALL, tmp_path / "a")
        generate_dataset(SMALL, tmp_path / "b")
        assert all_file_bytes(tmp_path / "a") == all_file_bytes(tmp_path / "b")

    def test_entity_counts_frozen(self, tmp_path):
        _, scene = generate_dataset(SMALL, tmp_path / "d")
        nodules = sum(1 for im in scene.images
                      for e in im.entities if e.kind == "nodule")
        confounders = sum(1 for im in scene.images
                          for e in im.entities if e.kind == "confounder")
        assert nodules == SMALL_NODULES
        assert confounders == SMALL_CONFOUNDERS

    def test_confounder_rate_zero(self, tmp_path):
        cfg = SceneConfig(image_size=96, train_images=4, val_images=2,
                          confounder_rate=0.0, seed=3)
        _, scene = generate_dataset(cfg, tmp_path / "d")
        assert all(e.kind != "confounder"
                   for im in scene.images for e in im.entities)

    def test_split_sizes(self, tmp_path):
        manifest, _ = generate_dataset(SMALL, tmp_path / "d")
        assert len(manifest.split("train")) == 12
        assert len(manifest.split("val")) == 4

    def test_scene_round_trip(self, tmp_path):
        manifest, scene = generate_dataset(SMALL, tmp_path / "d")
        loaded = load_scene(manifest.resolve(manifest.scene))
        assert loaded.seed == scene.seed
        assert [im.image_id for im in loaded.images] == \
            [im.image_id for im in scene.images]
        assert loaded.images[0].entities == scene.images[0].entities

    def test_manifest_loads_and_masks_exist(self, tmp_path):
        generate_dataset(SMALL, tmp_path / "d")
        manifest = load_manifest(tmp_path / "d" / "manifest.json")  # checks paths
        image = manifest.images[0]
        assert len(image.masks) == 10
        mask = read_mask(manifest.resolve(dict(image.masks)["lung"]))
        assert (mask.width, mask.height) == (96, 96)

    def test_labels_contain_only_nodules(self, tmp_path):
        manifest, scene = generate_dataset(SMALL, tmp_path / "d")
        for im, scene_im in zip(manifest.images, scene.images):
            objs = load_labels(manifest.resolve(im.labels), manifest.vocabulary)
            n_scene = sum(1 for e in scene_im.entities if e.kind == "nodule")
            assert len(objs) == n_scene
            assert all(o.class_id == 0 for o in objs)

    def test_workers_do_not_change_bytes(self, tmp_path):
        generate_dataset(SMALL, tmp_path / "w1", workers=1)
        generate_dataset(SMALL, tmp_path / "w4", workers=4)
        assert all_file_bytes(tmp_path / "w1") == all_file_bytes(tmp_path / "w4")


class TestRendering:
    def test_structure_component_counts(self, tmp_path):
        cfg = SceneConfig(image_size=256, train_images=1, val_images=1, seed=5)
        _, scene = generate_dataset(cfg, tmp_path / "d")
        for spec in CANONICAL_LAYOUT:
            mask = render_structure_mask(scene.images[0], spec.name, 256)
            parts = components_from_mask(mask, 8, 8)
            assert len(parts) == len(spec.components), spec.name

    def test_extracted_boxes_close_to_generating_boxes(self, tmp_path):
        cfg = SceneConfig(image_size=256, train_images=2, val_images=1, seed=11)
        _, scene = generate_dataset(cfg, tmp_path / "d")
        for image in scene.images:
            for spec in CANONICAL_LAYOUT:
                mask = render_structure_mask(image, spec.name, 256)
                parts = components_from_mask(mask, 8, 8)
                generating = sorted(
                    (denormalize(e.box, 256, 256) for e in image.entities
                     if e.structure == spec.name),
                    key=lambda b: (b.y_min, b.x_min))
                for got, want in zip(parts, generating):
                    assert iou(got, want) >= 0.8

    def test_rect_rerasterization_is_exact(self):
        arr = np.zeros((128, 128), dtype=np.uint8)
        from uadet.geometry import NormalizedBBox
        box = NormalizedBBox(0.4, 0.3, 0.22, 0.13)
        render_component(arr, box, "rect")
        mask = PixelMask.from_array(arr)
        extracted = bbox_from_mask(mask)
        again = np.zeros_like(arr)
        from uadet.geometry import normalize
        render_component(again, normalize(extracted, 128, 128), "rect")
        assert mask_iou(mask, PixelMask.from_array(again)) == 1.0


def simulate_variant(tmp_path, variant, scene_cfg=SMALL, profile=None,
                     tag=None):
    manifest, scene = generate_dataset(scene_cfg, tmp_path / "d")
    profile = profile or default_profiles()[variant]
    out = tmp_path / f"preds_{tag or variant.value}"
    return simulate_detector(profile, manifest, scene_cfg.seed, out, scene=scene)


class TestSimulateDetector:
    def test_deterministic(self, tmp_path):
        a = simulate_variant(tmp_path, LabelSetVariant.FULL, tag="a")
        b = simulate_variant(tmp_path, LabelSetVariant.FULL, tag="b")
        for im_a, im_b in zip(a.images, b.images):
            assert a.resolve(im_a.predictions).read_bytes() == \
                b.resolve(im_b.predictions).read_bytes()

    def test_no_noise_profile_only_true_hits(self, tmp_path):
        profile = DetectorProfile(variant=LabelSetVariant.TARGET_PLUS_PRIOR,
                                  confusion_prob=0.0, background_rate=0.0)
        manifest = simulate_variant(tmp_path, profile.variant, profile=profile)
        scene = load_scene(manifest.resolve(manifest.scene))
        by_id = {im.image_id: im for im in scene.images}
        vocab = manifest.vocabulary
        for im, truths, dets in load_split_samples(manifest, "train"):
            entities = by_id[im.image_id].entities
            for det in dets:
                name = vocab.entry(det.class_id).name
                candidates = [e for e in entities
                              if (e.kind == "nodule" and name == "nodule")
                              or e.structure == name]
                best = max((iou(denormalize(det.box, 96, 96),
                                denormalize(e.box, 96, 96))
                            for e in candidates), default=0.0)
                assert best > 0.3  # every detection sits on a real entity

    def test_perfect_profile_reaches_full_sensitivity(self, tmp_path):
        profile = DetectorProfile(variant=LabelSetVariant.FULL, hit_rate=1.0,
                                  confusion_prob=0.0, background_rate=0.0,
                                  box_jitter=0.0)
        manifest = simulate_variant(tmp_path, profile.variant, profile=profile)
        samples = [(dets, truths) for _, truths, dets
                   in load_split_samples(manifest, "val")]
        curve = froc_curve(samples, 0.2)
        assert curve.points[-1].y == 1.0
        assert sensitivity_at_fppi(curve, 0.5) == 1.0

    def test_full_has_strictly_fewer_nodule_fps_than_target_only(self, tmp_path):
        counts = {}
        for variant in (LabelSetVariant.TARGET_ONLY, LabelSetVariant.FULL):
            manifest = simulate_variant(tmp_path, variant, tag=variant.value)
            fp = 0
            for _, truths, dets in load_split_samples(manifest, "train"):
                fp += match_detections(dets, truths,
                                       MatchConfig(0.2, 0.001, 0)).fp_count
            counts[variant.value] = fp
        assert counts == SMALL_TRAIN_FP_AT_0001  # frozen first-run baseline
        assert counts["full"] < counts["target-only"]

    def test_confusion_absorption_at_every_threshold(self, tmp_path):
        manifests = {
            v: simulate_variant(tmp_path, v, tag=v.value)
            for v in (LabelSetVariant.TARGET_ONLY, LabelSetVariant.FULL)
        }
        fppi = {}
        for variant, manifest in manifests.items():
            samples = [(dets, truths) for _, truths, dets
                       in load_split_samples(manifest, "val")]
            curve = froc_curve(samples, 0.2)

            def fppi_at(t, curve=curve):
                pts = [p for p in curve.points if p.threshold >= t]
                return pts[-1].x
            fppi[variant] = fppi_at
        strict = False
        for t in (0.001, 0.1, 0.25, 0.4, 0.6, 0.8):
            full_val = fppi[LabelSetVariant.FULL](t)
            to_val = fppi[LabelSetVariant.TARGET_ONLY](t)
            assert full_val <= to_val
            strict = strict or full_val < to_val
        assert strict

    def test_nothing_to_absorb_makes_prior_and_full_identical(self, tmp_path):
        # without confounders the fp class never fires, so the prior and
        # full detectors are the same detector
        cfg = SceneConfig(image_size=96, train_images=6, val_images=2,
                          confounder_rate=0.0, seed=13)
        profiles = default_profiles()
        manifest, scene = generate_dataset(cfg, tmp_path / "d")
        outs = {}
        for v in (LabelSetVariant.TARGET_PLUS_PRIOR, LabelSetVariant.FULL):
            m = simulate_detector(profiles[v], manifest, cfg.seed,
                                  tmp_path / v.value, scene=scene)
            outs[v] = {im.image_id: m.resolve(im.predictions).read_bytes()
                       for im in m.images}
        assert outs[LabelSetVariant.TARGET_PLUS_PRIOR] == outs[LabelSetVariant.FULL]

    def test_no_knowledge_gap_makes_all_variants_identical(self, tmp_path):
        # no confounders and no confusion: vocabulary differences are moot
        cfg = SceneConfig(image_size=96, train_images=6, val_images=2,
                          confounder_rate=0.0, seed=13)
        manifest, scene = generate_dataset(cfg, tmp_path / "d")
        outs = {}
        for v in LabelSetVariant:
            profile = DetectorProfile(variant=v, confusion_prob=0.0)
            m = simulate_detector(profile, manifest, cfg.seed,
                                  tmp_path / ("nc_" + v.value), scene=scene)
            outs[v] = {im.image_id: load_predictions(m.resolve(im.predictions))
                       for im in m.images}

        def nodule_only(preds):
            return {k: [d for d in v if d.class_id == 0]
                    for k, v in preds.items()}

        base = nodule_only(outs[LabelSetVariant.TARGET_ONLY])
        for v in (LabelSetVariant.TARGET_PLUS_PRIOR, LabelSetVariant.FULL):
            assert nodule_only(outs[v]) == base

    def test_entropy_mechanism(self, tmp_path):
        # confusions sit mid-range, so absorbing them lowers median entropy
        manifests = {
            v: simulate_variant(tmp_path, v, tag="ent_" + v.value)
            for v in (LabelSetVariant.TARGET_ONLY, LabelSetVariant.FULL)
        }
        medians = {}
        for v, manifest in manifests.items():
            dets = [d for _, _, ds in load_split_samples(manifest, "val")
                    for d in ds]
            medians[v] = entropy_summary(dets, 0, 0.25).median
        assert medians[LabelSetVariant.FULL] < medians[LabelSetVariant.TARGET_ONLY]

    def test_workers_do_not_change_prediction_bytes(self, tmp_path):
        manifest, scene = generate_dataset(SMALL, tmp_path / "d")
        profile = default_profiles()[LabelSetVariant.FULL]
        a = simulate_detector(profile, manifest, SMALL.seed, tmp_path / "w1",
                              scene=scene, workers=1)
        b = simulate_detector(profile, manifest, SMALL.seed, tmp_path / "w4",
                              scene=scene, workers=4)
        for im_a, im_b in zip(a.images, b.images):
            assert a.resolve(im_a.predictions).read_bytes() == \
                b.resolve(im_b.predictions).read_bytes()


@pytest.fixture(scope="module")
def small_report(tmp_path_factory):
    out = tmp_path_factory.mktemp("exp")
    cfg = SceneConfig(image_size=96, train_images=12, val_images=4, seed=7)
    report = run_policy_experiment(cfg, out, workers=1)
    return report, out


class TestPolicyExperiment:
    def test_report_schema(self, small_report):
        report, out = small_report
        doc = json.loads((out / "report.json").read_text())
        assert set(doc) == {"tool", "note", "seed", "scene_config", "profiles",
                            "mining", "uprior", "variants"}
        assert [v["variant"] for v in doc["variants"]] == \
            ["target-only", "target-plus-prior", "full"]
        for v in doc["variants"]:
            ev = v["validation"]
            assert set(ev["sensitivity_at_fppi"]) == {"0.2", "0.5"}
            for iou_key in ("0.2", "0.5"):
                assert set(ev["sensitivity_at_fppi"][iou_key]) == \
                    {"0.5", "1", "2", "5"}
            assert {"median", "q1", "q3"} <= set(ev["entropy"])
            assert set(v["mined_fp_counts"]) == {"0.001", "0.25"}

    def test_curve_csvs_written(self, small_report):
        _, out = small_report
        for variant in ("target-only", "target-plus-prior", "full"):
            curves = out / "variants" / variant / "curves"
            names = sorted(p.name for p in curves.iterdir())
            assert names == ["val_froc_iou0p2.csv", "val_froc_iou0p5.csv",
                             "val_pr_iou0p2.csv", "val_pr_iou0p5.csv"]

    def test_composed_variants_on_disk(self, small_report):
        _, out = small_report
        sizes = {}
        for variant in ("target-only", "target-plus-prior", "full"):
            manifest = load_manifest(out / "variants" / variant / "manifest.json")
            sizes[variant] = len(manifest.vocabulary)
        assert sizes == {"target-only": 1, "target-plus-prior": 11, "full": 12}

    def test_mining_monotone_in_threshold(self, small_report):
        report, _ = small_report
        for result in report.variants.values():
            assert result.mined_fp_counts[0.001] >= result.mined_fp_counts[0.25]
