"""Segmentation metrics: Dice, best dice, symmetric best dice, DiC.

Instances are the distinct nonzero integers of a label map; no connected
component analysis is applied. Degenerate conventions (documented because
they affect aggregate scores): dice of two empty masks is 1, of one empty
mask 0; best_dice from a map with no instances is 1; best_dice onto an
empty map is 0 when the source map has instances.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class EvaluationError(ValueError):
    pass


def _check_same_grid(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise EvaluationError(f"label maps differ in shape: {a.shape} vs {b.shape}")


def instance_ids(label_map: np.ndarray) -> list[int]:
    return [int(i) for i in np.unique(label_map) if i != 0]


def dice(mask_a: np.ndarray, mask_b: np.ndarray) -> float:
    """2|A∩B| / (|A|+|B|); 1.0 if both masks are empty, 0.0 if exactly one is."""
    _check_same_grid(mask_a, mask_b)
    a = int(np.count_nonzero(mask_a))
    b = int(np.count_nonzero(mask_b))
    if a == 0 and b == 0:
        return 1.0
    if a == 0 or b == 0:
        return 0.0
    inter = int(np.count_nonzero(np.logical_and(mask_a, mask_b)))
    return 2.0 * inter / (a + b)


def _dice_matrix(map_a: np.ndarray, map_b: np.ndarray,
                 ids_a: list[int], ids_b: list[int]) -> np.ndarray:
    """Pairwise dice between instances of two maps via a joint histogram."""
    la = np.searchsorted(ids_a, map_a.ravel())
    in_a = np.isin(map_a.ravel(), ids_a)
    lb = np.searchsorted(ids_b, map_b.ravel())
    in_b = np.isin(map_b.ravel(), ids_b)
    na, nb = len(ids_a), len(ids_b)
    joint = np.zeros((na + 1, nb + 1), dtype=np.int64)
    rows = np.where(in_a, la, na)
    cols = np.where(in_b, lb, nb)
    np.add.at(joint, (rows, cols), 1)
    inter = joint[:na, :nb].astype(np.float64)
    area_a = joint[:na, :].sum(axis=1, keepdims=True)
    area_b = joint[:, :nb].sum(axis=0, keepdims=True)
    return 2.0 * inter / (area_a + area_b)


def best_dice(from_map: np.ndarray, to_map: np.ndarray) -> float:
    """Mean over `from` instances of the best dice against any `to` instance."""
    _check_same_grid(from_map, to_map)
    ids_f = instance_ids(from_map)
    if not ids_f:
        return 1.0
    ids_t = instance_ids(to_map)
    if not ids_t:
        return 0.0
    matrix = _dice_matrix(from_map, to_map, ids_f, ids_t)
    return float(matrix.max(axis=1).mean())


def symmetric_best_dice(gt: np.ndarray, pred: np.ndarray) -> float:
    _check_same_grid(gt, pred)
    return min(best_dice(gt, pred), best_dice(pred, gt))


def diff_in_count(gt: np.ndarray, pred: np.ndarray) -> int:
    """Predicted minus ground-truth instance count (zero-area ids cannot occur
    in a map, so they are excluded by construction)."""
    _check_same_grid(gt, pred)
    return len(instance_ids(pred)) - len(instance_ids(gt))


@dataclass
class ImageScore:
    name: str
    bd_gt_to_pred: float
    bd_pred_to_gt: float
    sbd: float
    dic: int

    @property
    def abs_dic(self) -> int:
        return abs(self.dic)


@dataclass
class SBDReport:
    scores: list[ImageScore] = field(default_factory=list)

    @property
    def mean_bd_gt_to_pred(self) -> float:
        return float(np.mean([s.bd_gt_to_pred for s in self.scores]))

    @property
    def mean_bd_pred_to_gt(self) -> float:
        return float(np.mean([s.bd_pred_to_gt for s in self.scores]))

    @property
    def mean_sbd(self) -> float:
        return float(np.mean([s.sbd for s in self.scores]))

    @property
    def mean_dic(self) -> float:
        return float(np.mean([s.dic for s in self.scores]))

    @property
    def mean_abs_dic(self) -> float:
        return float(np.mean([s.abs_dic for s in self.scores]))

    def to_csv(self, path: str | Path) -> None:
        import csv
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["image", "bd_gp", "bd_pg", "sbd", "dic"])
            for s in self.scores:
                writer.writerow([s.name, repr(s.bd_gt_to_pred), repr(s.bd_pred_to_gt),
                                 repr(s.sbd), s.dic])
            writer.writerow(["mean", repr(self.mean_bd_gt_to_pred),
                             repr(self.mean_bd_pred_to_gt), repr(self.mean_sbd),
                             repr(self.mean_dic)])


def score_pair(gt: np.ndarray, pred: np.ndarray, name: str = "") -> ImageScore:
    bd_gp = best_dice(gt, pred)
    bd_pg = best_dice(pred, gt)
    return ImageScore(name=name, bd_gt_to_pred=bd_gp, bd_pred_to_gt=bd_pg,
                      sbd=min(bd_gp, bd_pg), dic=diff_in_count(gt, pred))


def evaluate_directory(gt_dir: str | Path, pred_dir: str | Path,
                       pairing: str = "same-name") -> SBDReport:
    """Score every ground-truth label map against its same-named prediction.

    Every gt file must have a matching pred file (and vice versa);
    mismatches are reported exhaustively before any scoring happens.
    """
    from .dataset import read_label_map
    if pairing != "same-name":
        raise EvaluationError(f"unknown pairing rule {pairing!r}")
    gt_dir, pred_dir = Path(gt_dir), Path(pred_dir)
    for d in (gt_dir, pred_dir):
        if not d.is_dir():
            raise EvaluationError(f"not a directory: {d}")
    gt_files = {p.name: p for p in gt_dir.glob("*.png")}
    pred_files = {p.name: p for p in pred_dir.glob("*.png")}
    if not gt_files:
        raise EvaluationError(f"no label maps (*.png) in {gt_dir}")
    missing_pred = sorted(set(gt_files) - set(pred_files))
    missing_gt = sorted(set(pred_files) - set(gt_files))
    if missing_pred or missing_gt:
        parts = []
        if missing_pred:
            parts.append(f"no prediction for: {', '.join(missing_pred)}")
        if missing_gt:
            parts.append(f"no ground truth for: {', '.join(missing_gt)}")
        raise EvaluationError("unmatched files; " + "; ".join(parts))
    report = SBDReport()
    for name in sorted(gt_files):
        gt = read_label_map(gt_files[name])
        pred = read_label_map(pred_files[name])
        _check_same_grid(gt, pred)
        report.scores.append(score_pair(gt, pred, name=name))
    return report
