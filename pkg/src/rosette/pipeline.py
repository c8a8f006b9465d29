"""The per-image generation pipeline and the parallel dataset driver.

For image i: derive its seed, sample the plant, assign and augment
textures, sample camera and light, render both passes from one shared
visibility resolve, blur the premultiplied foreground, pick and augment a
background, composite, and write the sample. Every random decision comes
from a stream derived from (global_seed, i, purpose_tag), so image i is
identical whether generated alone, in sequence, or on any worker.

Purpose tags: plant, texture_assign, texture_augment, camera, light,
background. The dataset-scoped tag texture_uniform backs the
one-texture-for-the-whole-dataset policy.
"""

from __future__ import annotations

import multiprocessing as mp
import sys
from pathlib import Path

import numpy as np

from .camera import sample_camera, sample_light
from .config import GenerationConfig, config_to_text
from .dataset import (DatasetManifest, LeafRecord, SampleRecord,
                      _instance_areas_centroids, export_annotations,
                      load_background_bank, write_manifest, write_sample)
from .leaf import load_leaf_template
from .mesh import TriangleMesh
from .plant import PlantModel, assemble_plant, scene_dump_text
from .render import composite_over_background, gaussian_blur, render_plant
from .rng import RandomSource
from .textures import (TextureImage, TextureMode, assign_textures,
                       augment_image, fit_to_frame, load_bank)


def load_assets(cfg: GenerationConfig) -> tuple[TriangleMesh, list[TextureImage], list[TextureImage]]:
    """Resolve the template and both banks from the config."""
    template = load_leaf_template(cfg.template_path or None)
    if not cfg.texture_bank_path:
        raise ValueError("texture_bank_path is not set (config key or --textures)")
    if not cfg.background_bank_path:
        raise ValueError("background_bank_path is not set (config key or --backgrounds)")
    textures = load_bank(cfg.texture_bank_path)
    backgrounds = load_background_bank(cfg.background_bank_path)
    return template, textures, backgrounds


def _texture_stream(cfg: GenerationConfig, index: int) -> RandomSource:
    if cfg.texture_mode is TextureMode.PLANT_UNIFORM:
        # dataset-scoped: the same single draw repeats for every image
        return RandomSource.for_dataset(cfg.global_seed, "texture_uniform")
    return RandomSource.for_image(cfg.global_seed, index, "texture_assign")


def generate_image(cfg: GenerationConfig, index: int, template: TriangleMesh,
                   texture_bank: list[TextureImage],
                   background_bank: list[TextureImage]
                   ) -> tuple[np.ndarray, np.ndarray, PlantModel]:
    """Generate one sample; returns (rgb, label map, posed plant)."""
    plant = assemble_plant(RandomSource.for_image(cfg.global_seed, index, "plant"),
                           cfg, template)

    ids = assign_textures(_texture_stream(cfg, index), cfg.texture_mode,
                          texture_bank, len(plant.leaves))
    by_id = {t.id: t for t in texture_bank}
    aug_src = RandomSource.for_image(cfg.global_seed, index, "texture_augment")
    leaf_textures = []
    for leaf, tex_id in zip(plant.leaves, ids):
        leaf.texture_ref = tex_id
        leaf_textures.append(augment_image(
            aug_src, by_id[tex_id], with_exposure=True,
            flip_prob=cfg.augment_flip_prob, zoom_range=cfg.augment_zoom_range,
            exposure_range=cfg.augment_exposure_range))

    bbox = plant.bounds()
    cam = sample_camera(RandomSource.for_image(cfg.global_seed, index, "camera"),
                        cfg, bbox)
    light = sample_light(RandomSource.for_image(cfg.global_seed, index, "light"),
                         cfg, bbox)

    fb, label_map = render_plant(plant, leaf_textures, cam, light,
                                 shading=cfg.shading, roughness=cfg.oren_nayar_sigma)

    alpha = fb.alpha.astype(np.float64)
    premult = fb.color.astype(np.float64) / 255.0 * alpha[..., None]
    if cfg.blur_sigma > 0:
        blurred = gaussian_blur(np.dstack([premult, alpha]), cfg.blur_sigma)
        premult, alpha = blurred[..., :3], blurred[..., 3]

    bg_src = RandomSource.for_image(cfg.global_seed, index, "background")
    plate = background_bank[bg_src.integer(len(background_bank))]
    plate = augment_image(bg_src, plate, with_exposure=False,
                          flip_prob=cfg.augment_flip_prob,
                          zoom_range=cfg.augment_zoom_range)
    background = fit_to_frame(plate.pixels, cfg.image_width, cfg.image_height)
    rgb = composite_over_background(premult, np.clip(alpha, 0.0, 1.0), background)
    return rgb, label_map, plant


def leaf_records(plant: PlantModel, label_map: np.ndarray) -> list[LeafRecord]:
    stats = _instance_areas_centroids(label_map, len(plant.leaves))
    records = []
    for leaf, (area, cx, cy) in zip(plant.leaves, stats):
        p = leaf.params
        records.append(LeafRecord(
            instance_id=leaf.instance_id, pixel_area=area,
            centroid_x=cx, centroid_y=cy, texture_id=leaf.texture_ref,
            yaw=p.yaw, pitch=p.pitch, roll=p.roll,
            scale_x=p.scale_x, scale_y=p.scale_y, scale_z=p.scale_z,
            bend_curl=p.bend_curl,
            anchor_x=p.anchor[0], anchor_y=p.anchor[1], anchor_z=p.anchor[2]))
    return records


_WORKER: dict = {}


def _worker_init(cfg: GenerationConfig, out_dir: str, write_preview: bool,
                 dump_scenes: bool):
    template, textures, backgrounds = load_assets(cfg)
    _WORKER.update(cfg=cfg, out_dir=out_dir, write_preview=write_preview,
                   dump_scenes=dump_scenes, template=template,
                   textures=textures, backgrounds=backgrounds)


def _generate_one(index: int) -> SampleRecord:
    cfg = _WORKER["cfg"]
    rgb, label_map, plant = generate_image(cfg, index, _WORKER["template"],
                                           _WORKER["textures"], _WORKER["backgrounds"])
    out_dir = Path(_WORKER["out_dir"])
    if _WORKER["dump_scenes"]:
        (out_dir / "scene").mkdir(parents=True, exist_ok=True)
        (out_dir / f"scene/plant{index:05d}_scene.txt").write_text(scene_dump_text(plant))
    return write_sample(rgb, label_map, leaf_records(plant, label_map), out_dir,
                        index, write_preview=_WORKER["write_preview"],
                        include_zero_area_in_count=cfg.include_zero_area_annotations)


def generate_dataset(cfg: GenerationConfig, out_dir: str | Path,
                     indices: list[int] | None = None, workers: int = 1,
                     write_preview: bool = False, annotations: str | None = "masks",
                     dump_scenes: bool = False, progress: bool = False
                     ) -> DatasetManifest:
    """Generate a dataset (or an index subset) into out_dir.

    Outputs are index-addressed and every image owns its streams, so the
    worker count never changes the result. The manifest is assembled in
    index order after all writes complete.
    """
    cfg.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if indices is None:
        indices = list(range(cfg.dataset_size))
    if any(i < 0 for i in indices):
        raise ValueError("image indices must be >= 0")

    if workers <= 1:
        _worker_init(cfg, str(out_dir), write_preview, dump_scenes)
        records = []
        for n, i in enumerate(indices):
            records.append(_generate_one(i))
            if progress and (n + 1) % max(1, len(indices) // 20) == 0:
                print(f"  generated {n + 1}/{len(indices)}", file=sys.stderr)
    else:
        ctx = mp.get_context("fork")
        with ctx.Pool(workers, initializer=_worker_init,
                      initargs=(cfg, str(out_dir), write_preview, dump_scenes)) as pool:
            records = []
            for n, rec in enumerate(pool.imap_unordered(_generate_one, indices,
                                                        chunksize=4)):
                records.append(rec)
                if progress and (n + 1) % max(1, len(indices) // 20) == 0:
                    print(f"  generated {n + 1}/{len(indices)}", file=sys.stderr)

    manifest = DatasetManifest(records=sorted(records, key=lambda r: r.index),
                               config_text=config_to_text(cfg), root=out_dir)
    write_manifest(manifest, out_dir / "manifest.csv")
    (out_dir / "config.txt").write_text(manifest.config_text)
    if annotations:
        export_annotations(manifest, out_dir / "annotations.json", style=annotations,
                           include_zero_area=cfg.include_zero_area_annotations,
                           base_dir=out_dir)
    return manifest
