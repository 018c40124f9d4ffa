"""Coarse label-grid generation and scoring.

Training targets for the low-resolution part localizer are built either by
nearest-neighbor downsampling of a part mask or by labeling every pixel
with its nearest joint, then downsampling.  Grids read and write a simple
text format: first line ``H W``, then H lines of W space-separated label
names.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import PERSON_PARTS, LabelGrid, PartKind, part_from_name

__all__ = [
    "GridGenConfig",
    "resize_nearest",
    "joints_to_grid",
    "pixel_accuracy",
    "grid_to_text",
    "grid_from_text",
    "save_grid",
    "load_grid",
]

TIE_BREAK_ORDINAL = "part-ordinal-then-joint-order"


@dataclass(frozen=True)
class GridGenConfig:
    """Target grid size and the (fixed) labeling conventions."""

    target_height: int = 16
    target_width: int = 16
    tie_break: str = TIE_BREAK_ORDINAL
    metric: str = "euclidean"

    def __post_init__(self):
        if self.target_height < 1 or self.target_width < 1:
            raise ValueError("target size must be >= 1 in both dimensions")
        if self.tie_break != TIE_BREAK_ORDINAL:
            raise ValueError(f"unknown tie-break rule: {self.tie_break!r}")
        if self.metric != "euclidean":
            raise ValueError(f"unsupported distance metric: {self.metric!r}")


def resize_nearest(mask: LabelGrid, target: tuple[int, int]) -> LabelGrid:
    """Nearest-neighbor resize with center sampling.

    Target cell (r, c) takes the source pixel at
    ``(floor((r + 0.5) * H / Ht), floor((c + 0.5) * W / Wt))``, which makes
    the identity resize exact.
    """
    th, tw = target
    if th < 1 or tw < 1:
        raise ValueError("target size must be >= 1 in both dimensions")
    h, w = mask.shape
    rows = np.minimum(((np.arange(th) + 0.5) * h / th).astype(np.int64), h - 1)
    cols = np.minimum(((np.arange(tw) + 0.5) * w / tw).astype(np.int64), w - 1)
    return LabelGrid(mask.labels[np.ix_(rows, cols)])


def joints_to_grid(
    joints: Sequence[tuple[PartKind, float, float]],
    image_size: tuple[int, int],
    cfg: GridGenConfig | None = None,
) -> LabelGrid:
    """Label every pixel with the part of its nearest joint.

    ``image_size`` is (width, height); pixel (r, c) sits at point (c, r).
    Equidistant joints tie-break by part ordinal, then by position in the
    joint list, so the result is deterministic.  Every pixel gets a person
    part; the output never contains background.
    """
    del cfg  # both knobs are currently fixed; kept for signature stability
    if len(joints) == 0:
        raise ValueError("need at least one joint")
    w, h = image_size
    if w < 1 or h < 1:
        raise ValueError("image size must be positive")
    ys, xs = np.mgrid[0:h, 0:w]
    best_d2 = np.full((h, w), np.inf)
    best_label = np.zeros((h, w), dtype=np.int8)
    # Process joints in tie-break priority order; strict < keeps the
    # higher-priority joint on exact distance ties.
    order = sorted(range(len(joints)), key=lambda i: (int(joints[i][0]), i))
    for i in order:
        part, jx, jy = joints[i]
        if part not in PERSON_PARTS:
            raise ValueError("joints must name person parts")
        dx = xs - float(jx)
        dy = ys - float(jy)
        d2 = dx * dx + dy * dy
        closer = d2 < best_d2
        best_d2[closer] = d2[closer]
        best_label[closer] = int(part)
    return LabelGrid(best_label)


def pixel_accuracy(pred: LabelGrid, gt: LabelGrid) -> float:
    """Fraction of cells whose labels agree."""
    if pred.shape != gt.shape:
        raise ValueError(f"grid shapes differ: {pred.shape} vs {gt.shape}")
    agree = int(np.count_nonzero(pred.labels == gt.labels))
    return agree / (pred.height * pred.width)


# ---------------------------------------------------------------------------
# Grid text format
# ---------------------------------------------------------------------------

def grid_to_text(grid: LabelGrid) -> str:
    lines = [f"{grid.height} {grid.width}"]
    for r in range(grid.height):
        lines.append(" ".join(PartKind(v).label for v in grid.labels[r]))
    return "\n".join(lines) + "\n"


def grid_from_text(text: str) -> LabelGrid:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty grid text")
    try:
        h, w = (int(v) for v in lines[0].split())
    except ValueError:
        raise ValueError(f"bad grid header: {lines[0]!r}") from None
    if len(lines) != h + 1:
        raise ValueError(f"expected {h} grid rows, got {len(lines) - 1}")
    arr = np.empty((h, w), dtype=np.int8)
    for r in range(h):
        names = lines[r + 1].split()
        if len(names) != w:
            raise ValueError(f"row {r} has {len(names)} cells, expected {w}")
        arr[r] = [int(part_from_name(n)) for n in names]
    return LabelGrid(arr)


def save_grid(grid: LabelGrid, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(grid_to_text(grid))


def load_grid(path) -> LabelGrid:
    with open(path, "r", encoding="utf-8") as fh:
        return grid_from_text(fh.read())
