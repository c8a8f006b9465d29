"""On-disk dataset layout, manifests, annotation export and batch mixing.

Layout under an output directory:

    rgb/plantNNNNN_rgb.png        8-bit RGB render
    label/plantNNNNN_label.png    16-bit single-channel instance ids
    preview/plantNNNNN_preview.png  optional colorized labels (human inspection)
    scene/plantNNNNN_scene.txt    optional geometry dumps
    manifest.csv                  one row per leaf instance (columns below)
    config.txt                    exact config snapshot (re-parseable)
    annotations.json              per-instance boxes + masks or polygons

manifest.csv columns: index, rgb, label, width, height, leaf_count,
instance_id, pixel_area, centroid_x, centroid_y, texture_id, yaw, pitch,
roll, scale_x, scale_y, scale_z, bend_curl, anchor_x, anchor_y, anchor_z.
Paths are relative to the manifest's directory, leaf_count counts visible
(nonzero-area) instances, centroids are pixel coordinates (x = column),
and fully occluded leaves keep their row with pixel_area 0 and empty
centroids. The manifest alone is sufficient for the distribution
analyses; images never need reopening.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .rng import RandomSource
from .textures import TextureImage, load_bank

MANIFEST_COLUMNS = [
    "index", "rgb", "label", "width", "height", "leaf_count",
    "instance_id", "pixel_area", "centroid_x", "centroid_y", "texture_id",
    "yaw", "pitch", "roll", "scale_x", "scale_y", "scale_z", "bend_curl",
    "anchor_x", "anchor_y", "anchor_z",
]

FORMAT_VERSION = 1


@dataclass
class LeafRecord:
    instance_id: int
    pixel_area: int
    centroid_x: float | None
    centroid_y: float | None
    texture_id: str
    yaw: float = 0.0
    pitch: float = 0.0
    roll: float = 0.0
    scale_x: float = 1.0
    scale_y: float = 1.0
    scale_z: float = 1.0
    bend_curl: float = 0.0
    anchor_x: float = 0.0
    anchor_y: float = 0.0
    anchor_z: float = 0.0


@dataclass
class SampleRecord:
    index: int
    rgb_path: str                # relative to the dataset root
    label_path: str
    width: int
    height: int
    leaf_count: int              # visible (nonzero-area) instances
    leaves: list[LeafRecord] = field(default_factory=list)


@dataclass
class DatasetManifest:
    records: list[SampleRecord] = field(default_factory=list)
    config_text: str = ""
    format_version: int = FORMAT_VERSION
    root: Path | None = None     # set when read from / written to disk

    def add(self, record: SampleRecord) -> None:
        self.records.append(record)

    def sorted(self) -> "DatasetManifest":
        return DatasetManifest(records=sorted(self.records, key=lambda r: r.index),
                               config_text=self.config_text,
                               format_version=self.format_version, root=self.root)


def _instance_areas_centroids(label_map: np.ndarray, n_instances: int):
    """Pixel area and centroid (x=column, y=row) for ids 1..n_instances."""
    h, w = label_map.shape
    flat = label_map.ravel()
    nz = np.nonzero(flat)[0]
    ids = flat[nz]
    areas = np.bincount(ids, minlength=n_instances + 1)
    sum_r = np.bincount(ids, weights=nz // w, minlength=n_instances + 1)
    sum_c = np.bincount(ids, weights=nz % w, minlength=n_instances + 1)
    out = []
    for k in range(1, n_instances + 1):
        a = int(areas[k]) if k < len(areas) else 0
        if a > 0:
            out.append((a, sum_c[k] / a, sum_r[k] / a))
        else:
            out.append((0, None, None))
    return out


def write_label_png(label_map: np.ndarray, path: Path) -> None:
    if label_map.min() < 0 or label_map.max() > 65535:
        raise ValueError(f"label ids outside the 16-bit range: "
                         f"[{label_map.min()}, {label_map.max()}]")
    Image.fromarray(label_map.astype(np.uint16)).save(path)


def read_label_map(path: str | Path) -> np.ndarray:
    """Read an integer label map; 8-bit files are widened losslessly."""
    with Image.open(path) as img:
        if img.mode in ("P", "RGB", "RGBA"):
            raise ValueError(
                f"{path}: {img.mode}-encoded label file; labels must be a "
                "single-channel integer PNG (convert with e.g. "
                "Image.open(p).convert('I') after mapping colors back to ids)")
        if img.mode not in ("L", "I", "I;16"):
            raise ValueError(f"{path}: unsupported label image mode {img.mode!r}")
        arr = np.asarray(img)
    if not np.issubdtype(arr.dtype, np.integer):
        raise ValueError(f"{path}: non-integer pixel data ({arr.dtype})")
    return arr.astype(np.int32)


_PREVIEW_GOLDEN = 0.61803398875


def _preview_palette(n: int) -> np.ndarray:
    # evenly hue-spaced colors, id 0 black
    colors = np.zeros((n + 1, 3), dtype=np.uint8)
    for k in range(1, n + 1):
        hue = (k * _PREVIEW_GOLDEN) % 1.0
        i = int(hue * 6.0)
        f = hue * 6.0 - i
        p, q, t = 0.25, 1.0 - 0.75 * f, 0.25 + 0.75 * f
        rgb = [(1, t, p), (q, 1, p), (p, 1, t), (p, q, 1), (t, p, 1), (1, p, q)][i % 6]
        colors[k] = np.rint(np.array(rgb) * 255.0)
    return colors


def write_sample(rgb: np.ndarray, label_map: np.ndarray, leaves: list[LeafRecord],
                 out_dir: str | Path, index: int, write_preview: bool = False,
                 include_zero_area_in_count: bool = False) -> SampleRecord:
    """Write one sample's images and build its manifest record."""
    if rgb.shape[:2] != label_map.shape:
        raise ValueError(f"rgb {rgb.shape[:2]} and label {label_map.shape} "
                         "dimensions differ")
    out_dir = Path(out_dir)
    rgb_rel = f"rgb/plant{index:05d}_rgb.png"
    label_rel = f"label/plant{index:05d}_label.png"
    (out_dir / "rgb").mkdir(parents=True, exist_ok=True)
    (out_dir / "label").mkdir(parents=True, exist_ok=True)
    Image.fromarray(rgb, mode="RGB").save(out_dir / rgb_rel)
    write_label_png(label_map, out_dir / label_rel)
    if write_preview:
        (out_dir / "preview").mkdir(parents=True, exist_ok=True)
        palette = _preview_palette(max((l.instance_id for l in leaves), default=0))
        Image.fromarray(palette[label_map], mode="RGB").save(
            out_dir / f"preview/plant{index:05d}_preview.png")
    if include_zero_area_in_count:
        count = len(leaves)
    else:
        count = sum(1 for l in leaves if l.pixel_area > 0)
    h, w = label_map.shape
    return SampleRecord(index=index, rgb_path=rgb_rel, label_path=label_rel,
                        width=w, height=h, leaf_count=count, leaves=leaves)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def write_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_COLUMNS)
        for rec in manifest.records:
            for leaf in rec.leaves:
                writer.writerow([_fmt(v) for v in (
                    rec.index, rec.rgb_path, rec.label_path, rec.width, rec.height,
                    rec.leaf_count, leaf.instance_id, leaf.pixel_area,
                    leaf.centroid_x, leaf.centroid_y, leaf.texture_id,
                    leaf.yaw, leaf.pitch, leaf.roll,
                    leaf.scale_x, leaf.scale_y, leaf.scale_z, leaf.bend_curl,
                    leaf.anchor_x, leaf.anchor_y, leaf.anchor_z)])


def read_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    records: dict[int, SampleRecord] = {}
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(MANIFEST_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"{path}: missing manifest columns {sorted(missing)}")
        for row in reader:
            idx = int(row["index"])
            if idx not in records:
                records[idx] = SampleRecord(
                    index=idx, rgb_path=row["rgb"], label_path=row["label"],
                    width=int(row["width"]), height=int(row["height"]),
                    leaf_count=int(row["leaf_count"]))
            records[idx].leaves.append(LeafRecord(
                instance_id=int(row["instance_id"]),
                pixel_area=int(row["pixel_area"]),
                centroid_x=float(row["centroid_x"]) if row["centroid_x"] else None,
                centroid_y=float(row["centroid_y"]) if row["centroid_y"] else None,
                texture_id=row["texture_id"],
                yaw=float(row["yaw"]), pitch=float(row["pitch"]), roll=float(row["roll"]),
                scale_x=float(row["scale_x"]), scale_y=float(row["scale_y"]),
                scale_z=float(row["scale_z"]), bend_curl=float(row["bend_curl"]),
                anchor_x=float(row["anchor_x"]), anchor_y=float(row["anchor_y"]),
                anchor_z=float(row["anchor_z"])))
    manifest = DatasetManifest(records=[records[i] for i in sorted(records)],
                               root=path.parent)
    return manifest


def load_background_bank(directory: str | Path) -> list[TextureImage]:
    """Background plates: same bank contract as leaf textures; plates are
    center-cropped or scaled to the frame at use time."""
    return load_bank(directory)


def _mask_rle(mask: np.ndarray) -> dict:
    """Row-major run-length encoding; counts alternate 0-runs and 1-runs,
    starting with the leading 0-run (possibly length 0)."""
    flat = mask.ravel().astype(np.int8)
    changes = np.nonzero(np.diff(flat))[0] + 1
    boundaries = np.concatenate(([0], changes, [flat.size]))
    counts = np.diff(boundaries).tolist()
    if flat[0] == 1:
        counts = [0] + counts
    return {"size": [int(mask.shape[0]), int(mask.shape[1])], "counts": counts}


def _mask_polygons(mask: np.ndarray) -> list[list[float]]:
    from skimage import measure
    polys = []
    for contour in measure.find_contours(mask.astype(float), 0.5):
        ring = []
        for r, c in contour:
            ring.extend([float(c), float(r)])
        polys.append(ring)
    return polys


def export_annotations(manifest: DatasetManifest, out_path: str | Path,
                       style: str = "masks", include_zero_area: bool = False,
                       base_dir: str | Path | None = None) -> dict:
    """One annotation per distinct nonzero label: tight box, area, mask encoding.

    style: "masks" (row-major RLE) or "polygons" (contour rings).
    Ordering is deterministic by (image index, instance id). Zero-area
    instances are dropped unless include_zero_area is set (they then carry
    an empty encoding and a null bbox).
    """
    if style not in ("masks", "polygons"):
        raise ValueError(f"unknown annotation style {style!r}")
    base = Path(base_dir) if base_dir is not None else (manifest.root or Path("."))
    annotations = []
    for rec in sorted(manifest.records, key=lambda r: r.index):
        label_path = base / rec.label_path
        if not label_path.exists():
            raise FileNotFoundError(f"label map missing for image {rec.index}: {label_path}")
        label_map = read_label_map(label_path)
        ids = sorted(int(i) for i in np.unique(label_map) if i != 0)
        known = {l.instance_id for l in rec.leaves} or set(ids)
        if include_zero_area:
            ids = sorted(set(ids) | known)
        for inst in ids:
            mask = label_map == inst
            area = int(mask.sum())
            entry = {"image_index": rec.index, "instance_id": inst, "area": area}
            if area == 0:
                entry["bbox"] = None
                entry["masks" if style == "masks" else "polygons"] = (
                    {"size": list(label_map.shape), "counts": [label_map.size]}
                    if style == "masks" else [])
            else:
                rows, cols = np.nonzero(mask)
                entry["bbox"] = [int(cols.min()), int(rows.min()),
                                 int(cols.max() - cols.min() + 1),
                                 int(rows.max() - rows.min() + 1)]
                if style == "masks":
                    entry["masks"] = _mask_rle(mask)
                else:
                    entry["polygons"] = _mask_polygons(mask)
            annotations.append(entry)
    doc = {"format_version": FORMAT_VERSION, "style": style, "annotations": annotations}
    Path(out_path).write_text(json.dumps(doc, separators=(",", ":")) + "\n")
    return doc


def _cycled_order(n: int, total: int, src: RandomSource) -> list[int]:
    # concatenated reshuffles until `total` indices are emitted
    order: list[int] = []
    while len(order) < total:
        order.extend(int(i) for i in src.permutation(n))
    return order[:total]


def mix_manifests(real: DatasetManifest, synthetic: DatasetManifest,
                  batch_size: int, src: RandomSource
                  ) -> list[list[tuple[str, SampleRecord]]]:
    """Epoch of batches, each exactly half real and half synthetic.

    Within-source order is a seeded shuffle; the smaller source cycles
    through fresh reshuffles until the epoch (one pass over the larger
    source, rounded up to whole batches) is covered.
    """
    if batch_size <= 0 or batch_size % 2 != 0:
        raise ValueError(f"batch_size must be a positive even integer, got {batch_size}")
    if not real.records or not synthetic.records:
        raise ValueError("both manifests must be non-empty")
    half = batch_size // 2
    n_batches = math.ceil(max(len(real.records), len(synthetic.records)) / half)
    real_order = _cycled_order(len(real.records), half * n_batches, src)
    synth_order = _cycled_order(len(synthetic.records), half * n_batches, src)
    batches = []
    for b in range(n_batches):
        batch = [("real", real.records[i]) for i in real_order[b * half:(b + 1) * half]]
        batch += [("synthetic", synthetic.records[i])
                  for i in synth_order[b * half:(b + 1) * half]]
        batches.append(batch)
    return batches


def split_manifest(manifest: DatasetManifest, val_fraction: float,
                   src: RandomSource) -> tuple[DatasetManifest, DatasetManifest]:
    """Seeded train/validation split (defaults elsewhere use 80/20)."""
    if not 0.0 <= val_fraction <= 1.0:
        raise ValueError(f"val_fraction must lie in [0, 1], got {val_fraction}")
    order = src.permutation(len(manifest.records))
    n_val = round(len(manifest.records) * val_fraction)
    val_idx = set(int(i) for i in order[:n_val])
    train = [r for k, r in enumerate(manifest.records) if k not in val_idx]
    val = [r for k, r in enumerate(manifest.records) if k in val_idx]
    return (DatasetManifest(records=train, config_text=manifest.config_text, root=manifest.root),
            DatasetManifest(records=val, config_text=manifest.config_text, root=manifest.root))
