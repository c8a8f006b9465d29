"""Dataset distribution analyses: centroid heatmaps and leaf-count histograms.

Both accept either a manifest.csv (no image reads needed) or a directory
of label-map PNGs. Centroids are binned on a grid normalized to the image
dimensions; the radial spread statistic is the root-mean-square distance
of centroids from the image center, in pixels.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image


@dataclass
class CentroidHeatmap:
    grid: np.ndarray             # (G, G) int64 counts, row = y bin
    total: int                   # instances processed (== grid.sum())
    image_width: int
    image_height: int
    radial_std: float            # RMS centroid distance from image center, pixels


@dataclass
class CountHistogram:
    bins: dict[int, int]         # leaf count -> number of images
    mean: float
    variance: float              # population variance of per-image counts

    @property
    def total_images(self) -> int:
        return sum(self.bins.values())


def _is_manifest(source: str | Path) -> bool:
    return Path(source).is_file() and str(source).endswith(".csv")


def _iter_manifest_instances(path: Path):
    from .dataset import read_manifest
    for rec in read_manifest(path).records:
        for leaf in rec.leaves:
            if leaf.pixel_area > 0:
                yield leaf.centroid_x, leaf.centroid_y, rec.width, rec.height


def _label_files(directory: Path) -> list[Path]:
    files = sorted(directory.glob("*.png"))
    if not files:
        raise ValueError(f"no label maps (*.png) in {directory}")
    return files


def _iter_label_dir_instances(directory: Path):
    from .dataset import read_label_map
    for path in _label_files(directory):
        label_map = read_label_map(path)
        h, w = label_map.shape
        flat = label_map.ravel()
        nz = np.nonzero(flat)[0]
        if nz.size == 0:
            continue
        ids = flat[nz]
        areas = np.bincount(ids)
        sum_r = np.bincount(ids, weights=nz // w)
        sum_c = np.bincount(ids, weights=nz % w)
        for k in np.nonzero(areas)[0]:
            if k == 0:
                continue
            yield sum_c[k] / areas[k], sum_r[k] / areas[k], w, h


def _iter_instances(source: str | Path):
    source = Path(source)
    if _is_manifest(source):
        yield from _iter_manifest_instances(source)
    elif source.is_dir():
        yield from _iter_label_dir_instances(source)
    else:
        raise ValueError(f"source must be a manifest.csv or a label directory: {source}")


def centroid_heatmap(source: str | Path, grid_size: int = 32) -> CentroidHeatmap:
    """Bin per-instance centroids into a grid_size^2 grid over the frame."""
    if grid_size < 1:
        raise ValueError(f"grid_size must be >= 1, got {grid_size}")
    grid = np.zeros((grid_size, grid_size), dtype=np.int64)
    sq_sum = 0.0
    total = 0
    width = height = 0
    for cx, cy, w, h in _iter_instances(source):
        width, height = w, h
        gx = min(int(cx / w * grid_size), grid_size - 1)
        gy = min(int(cy / h * grid_size), grid_size - 1)
        grid[gy, gx] += 1
        sq_sum += (cx - w / 2.0) ** 2 + (cy - h / 2.0) ** 2
        total += 1
    if total == 0:
        raise ValueError(f"no instances found in {source}")
    return CentroidHeatmap(grid=grid, total=total, image_width=width,
                           image_height=height,
                           radial_std=float(np.sqrt(sq_sum / total)))


def _iter_image_counts(source: str | Path):
    source = Path(source)
    if _is_manifest(source):
        from .dataset import read_manifest
        for rec in read_manifest(source).records:
            yield sum(1 for l in rec.leaves if l.pixel_area > 0)
    elif source.is_dir():
        from .dataset import read_label_map
        for path in _label_files(source):
            label_map = read_label_map(path)
            yield len([i for i in np.unique(label_map) if i != 0])
    else:
        raise ValueError(f"source must be a manifest.csv or a label directory: {source}")


def leaf_count_histogram(source: str | Path) -> CountHistogram:
    counts = list(_iter_image_counts(source))
    if not counts:
        raise ValueError(f"no images found in {source}")
    bins: dict[int, int] = {}
    for c in counts:
        bins[c] = bins.get(c, 0) + 1
    arr = np.array(counts, dtype=np.float64)
    return CountHistogram(bins=dict(sorted(bins.items())),
                          mean=float(arr.mean()), variance=float(arr.var()))


def write_heatmap_csv(heatmap: CentroidHeatmap, path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        for row in heatmap.grid:
            writer.writerow([int(v) for v in row])


def write_heatmap_png(heatmap: CentroidHeatmap, path: str | Path) -> None:
    peak = max(1, int(heatmap.grid.max()))
    img = np.rint(heatmap.grid / peak * 255.0).astype(np.uint8)
    Image.fromarray(img, mode="L").save(path)


def write_histogram_csv(hist: CountHistogram, path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["leaf_count", "image_count"])
        for count, images in hist.bins.items():
            writer.writerow([count, images])
