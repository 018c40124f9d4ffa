"""Deterministic synthetic dataset generator.

Makes the pipeline's claims testable at desk scale: every instance gets a
person box, a 16x16 grid with one planted rectangular component per part,
joints, part boxes, part-action labels, a small noise image, and features.
Planted parts carry class-dependent Gaussian features whose class means
sit pairwise ``snr`` apart; the other parts are class-independent noise;
the bbox feature carries the same construction at the weaker ``bbox_snr``.
Everything is a pure function of the seed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .core import (
    PERSON_PARTS,
    BodyActionLabel,
    Box,
    FeatureVector,
    InstanceAnnotation,
    LabelGrid,
    PartKind,
    make_action_labels,
)
from .features import FeatureStore
from .part_actions import labels_for

__all__ = ["SynthConfig", "SynthDataset", "synth_generate", "GRID_SIZE"]

GRID_SIZE = 16

# Base cell rectangles (r0, c0, r1, c1 inclusive) per part.  Bands are two
# cells apart, so rectangles stay pairwise disjoint under +-1 jitter and
# every part is trivially a single 4-connected component.
_BASE_RECTS: dict[PartKind, tuple[int, int, int, int]] = {
    PartKind.HEAD: (0, 6, 2, 9),
    PartKind.TORSO: (5, 6, 8, 9),
    PartKind.ARM: (5, 1, 8, 3),
    PartKind.HAND: (11, 1, 13, 3),
    PartKind.LEG: (11, 6, 14, 9),
}


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    n_classes: int = 4
    per_class: int = 50
    body_dim: int = 8
    part_dim: int = 6
    planted: tuple[PartKind, ...] = (PartKind.HAND, PartKind.HEAD)
    snr: float = 5.0
    bbox_snr: float = 0.5
    grid_noise: float = 0.0
    image_size: tuple[int, int] = (64, 64)

    def __post_init__(self):
        if self.n_classes < 2:
            raise ValueError("need at least two classes")
        if self.per_class < 1:
            raise ValueError("need at least one instance per class")
        if not set(self.planted) <= set(PERSON_PARTS):
            raise ValueError("planted parts must be person parts")
        if len(set(self.planted)) != len(self.planted):
            raise ValueError("planted parts must be distinct")
        if self.snr <= 0:
            raise ValueError("snr must be > 0")
        if self.bbox_snr < 0:
            raise ValueError("bbox_snr must be >= 0")
        if not 0.0 <= self.grid_noise <= 1.0:
            raise ValueError("grid_noise must be in [0, 1]")
        if self.n_classes > min(self.body_dim, self.part_dim):
            raise ValueError(
                "n_classes may not exceed the smaller feature dim "
                "(class means are built orthonormal)"
            )


@dataclass
class SynthDataset:
    config: SynthConfig
    classes: tuple[BodyActionLabel, ...]
    annotations: list[InstanceAnnotation]
    gt_grids: dict[str, LabelGrid]
    pred_grids: dict[str, LabelGrid]
    store: FeatureStore
    images: dict[str, np.ndarray]
    planted_cells: dict[str, Mapping[PartKind, tuple[int, int, int, int]]] = field(
        default_factory=dict
    )


def _orthonormal_means(rng: np.random.Generator, dim: int, n: int, sep: float) -> np.ndarray:
    """n class means, pairwise exactly ``sep`` apart (scaled orthonormal set)."""
    q, _ = np.linalg.qr(rng.standard_normal((dim, n)))
    return (sep / np.sqrt(2.0)) * q.T  # rows are means


def _scaled_extent(extent: tuple[int, int, int, int], person: Box) -> Box:
    # same cell-to-pixel contract as the grid decoder
    r0, c0, r1, c1 = extent
    pw = person.width
    ph = person.height
    return Box(
        person.x0 + c0 * pw / GRID_SIZE,
        person.y0 + r0 * ph / GRID_SIZE,
        person.x0 + (c1 + 1) * pw / GRID_SIZE,
        person.y0 + (r1 + 1) * ph / GRID_SIZE,
    )


def synth_generate(cfg: SynthConfig) -> SynthDataset:
    rng = np.random.default_rng(cfg.seed)
    classes = make_action_labels([f"action{c}" for c in range(cfg.n_classes)])
    w, h = cfg.image_size

    part_means = {
        ("body-net", part): _orthonormal_means(rng, cfg.body_dim, cfg.n_classes, cfg.snr)
        for part in cfg.planted
    }
    part_means.update(
        {
            ("part-net", part): _orthonormal_means(
                rng, cfg.part_dim, cfg.n_classes, cfg.snr
            )
            for part in cfg.planted
        }
    )
    bbox_means = (
        _orthonormal_means(rng, cfg.body_dim, cfg.n_classes, cfg.bbox_snr)
        if cfg.bbox_snr > 0
        else np.zeros((cfg.n_classes, cfg.body_dim))
    )

    annotations = []
    gt_grids: dict[str, LabelGrid] = {}
    pred_grids: dict[str, LabelGrid] = {}
    images: dict[str, np.ndarray] = {}
    planted_cells: dict[str, dict[PartKind, tuple[int, int, int, int]]] = {}
    store = FeatureStore()

    for c in range(cfg.n_classes):
        for i in range(cfg.per_class):
            instance_id = f"c{c:02d}i{i:04d}"
            px0 = float(rng.uniform(1.0, 5.0))
            py0 = float(rng.uniform(1.0, 5.0))
            px1 = float(w - rng.uniform(1.0, 5.0))
            py1 = float(h - rng.uniform(1.0, 5.0))
            person = Box(px0, py0, px1, py1)

            grid = np.full((GRID_SIZE, GRID_SIZE), int(PartKind.BACKGROUND), np.int8)
            extents: dict[PartKind, tuple[int, int, int, int]] = {}
            for part in PERSON_PARTS:
                r0, c0, r1, c1 = _BASE_RECTS[part]
                dr = int(rng.integers(-1, 2))
                dc = int(rng.integers(-1, 2))
                r0 = min(max(r0 + dr, 0), GRID_SIZE - 1)
                r1 = min(max(r1 + dr, 0), GRID_SIZE - 1)
                c0 = min(max(c0 + dc, 0), GRID_SIZE - 1)
                c1 = min(max(c1 + dc, 0), GRID_SIZE - 1)
                grid[r0:r1 + 1, c0:c1 + 1] = int(part)
            for part in PERSON_PARTS:
                cells = np.argwhere(grid == int(part))
                extents[part] = (
                    int(cells[:, 0].min()),
                    int(cells[:, 1].min()),
                    int(cells[:, 0].max()),
                    int(cells[:, 1].max()),
                )
            gt = LabelGrid(grid)

            noisy = grid.copy()
            if cfg.grid_noise > 0:
                mask = rng.random((GRID_SIZE, GRID_SIZE)) < cfg.grid_noise
                noise_vals = rng.integers(0, len(PartKind), (GRID_SIZE, GRID_SIZE))
                noisy[mask] = noise_vals[mask].astype(np.int8)

            joints = tuple(
                (
                    part,
                    person.x0 + (extents[part][1] + extents[part][3] + 1) / 2.0
                    * person.width / GRID_SIZE,
                    person.y0 + (extents[part][0] + extents[part][2] + 1) / 2.0
                    * person.height / GRID_SIZE,
                )
                for part in PERSON_PARTS
            )
            part_boxes = {p: _scaled_extent(extents[p], person) for p in PERSON_PARTS}
            part_actions = {}
            for part in PERSON_PARTS:
                opts = labels_for(part)
                if rng.random() < 0.1:
                    part_actions[part] = opts[int(rng.integers(0, len(opts)))]
                else:
                    part_actions[part] = opts[c % len(opts)]

            annotations.append(
                InstanceAnnotation(
                    image_id=instance_id,
                    image_size=cfg.image_size,
                    person_box=person,
                    body_action=classes[c],
                    joints=joints,
                    part_boxes=part_boxes,
                    part_actions=part_actions,
                )
            )
            gt_grids[instance_id] = gt
            pred_grids[instance_id] = LabelGrid(noisy)
            images[instance_id] = rng.random((h, w))
            planted_cells[instance_id] = extents

            store.add(
                instance_id,
                "bbox",
                FeatureVector(
                    bbox_means[c] + rng.standard_normal(cfg.body_dim),
                    source="body-net",
                    region=person,
                ),
            )
            for part in PERSON_PARTS:
                for tag, dim in (("body-net", cfg.body_dim), ("part-net", cfg.part_dim)):
                    if part in cfg.planted:
                        mean = part_means[(tag, part)][c]
                    else:
                        mean = np.zeros(dim)
                    store.add(
                        instance_id,
                        part.label,
                        FeatureVector(
                            mean + rng.standard_normal(dim),
                            source=tag,
                            region=part_boxes[part],
                        ),
                    )

    return SynthDataset(
        config=cfg,
        classes=classes,
        annotations=annotations,
        gt_grids=gt_grids,
        pred_grids=pred_grids,
        store=store,
        images=images,
        planted_cells=planted_cells,
    )
