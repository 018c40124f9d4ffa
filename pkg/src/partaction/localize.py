"""Decode coarse label grids into per-part boxes, with fallback completion.

A predicted grid rarely covers every part.  Decoding keeps, per part, the
largest 4-connected component of that part's cells and returns its extent
in person-box pixel coordinates.  Missing parts are then filled in: a
missing hand borrows the endpoints of a detected arm (two fixed-size boxes,
one per endpoint); anything else falls back to the per-part mean box
learned from training annotations.

Cell (r0..r1, c0..c1) extent scales to the person box as::

    x0 = person.x0 + c0 * person.width / W
    x1 = person.x0 + (c1 + 1) * person.width / W      (rows analogous)
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import ndimage

from .core import (
    FRAME_PERSON_NORM,
    PERSON_PARTS,
    Box,
    InstanceAnnotation,
    LabelGrid,
    PartKind,
    part_from_name,
)

__all__ = [
    "PROV_DETECTED",
    "PROV_ENDPOINT",
    "PROV_PRIOR",
    "LocatedPart",
    "PartBoxes",
    "PriorTable",
    "PartLocConfig",
    "decode_components",
    "decode_boxes",
    "arm_endpoints",
    "complete_with_fallbacks",
    "compute_priors",
    "locate_parts",
    "normalize_box",
    "denormalize_box",
    "save_part_boxes",
    "load_part_boxes",
    "save_priors",
    "load_priors",
]

PROV_DETECTED = "detected"
PROV_ENDPOINT = "endpoint"
PROV_PRIOR = "prior"
_PROVENANCES = (PROV_DETECTED, PROV_ENDPOINT, PROV_PRIOR)


@dataclass(frozen=True)
class LocatedPart:
    box: Box
    provenance: str


@dataclass(frozen=True)
class PartBoxes:
    """All five parts located, each with a provenance tag.

    When the hand came from the arm-endpoint rule, ``hand_endpoints`` holds
    the two endpoint boxes (the map entry is their union) so the feature
    stage can pool them.
    """

    parts: Mapping[PartKind, LocatedPart]
    hand_endpoints: tuple[Box, Box] | None = None


@dataclass(frozen=True)
class PriorTable:
    """Per-part mean box in person-normalized coordinates, plus counts.

    Built from training instances only.
    """

    boxes: Mapping[PartKind, Box]
    counts: Mapping[PartKind, int]


@dataclass(frozen=True)
class PartLocConfig:
    """Grid geometry for endpoint sizing plus the degenerate-size fallback."""

    grid_height: int = 16
    grid_width: int = 16
    endpoint_cells: float = 2.0  # hand box side in grid cells if the prior size is degenerate


def _component_cells(part_mask: np.ndarray) -> np.ndarray | None:
    """Cells of the winning 4-connected component, row-major order.

    Largest component wins; ties go to the component whose topmost-leftmost
    cell is smallest in (row, col) order.  None when the mask is empty.
    """
    if not part_mask.any():
        return None
    labeled, n = ndimage.label(part_mask)  # default structure = 4-connectivity
    if n == 1:
        return np.argwhere(part_mask)
    sizes = ndimage.sum_labels(part_mask, labeled, index=np.arange(1, n + 1))
    best = None
    best_key = None
    for comp in range(1, n + 1):
        cells = np.argwhere(labeled == comp)
        key = (-int(sizes[comp - 1]), int(cells[0][0]), int(cells[0][1]))
        if best_key is None or key < best_key:
            best_key = key
            best = cells
    return best


def _extent_to_box(extent: tuple[int, int, int, int], grid_shape: tuple[int, int],
                   person: Box) -> Box:
    r0, c0, r1, c1 = extent
    h, w = grid_shape
    pw = person.width
    ph = person.height
    return Box(
        person.x0 + c0 * pw / w,
        person.y0 + r0 * ph / h,
        person.x0 + (c1 + 1) * pw / w,
        person.y0 + (r1 + 1) * ph / h,
    )


def decode_components(grid: LabelGrid) -> dict[PartKind, np.ndarray]:
    """Winning component cells per part present in the grid."""
    out: dict[PartKind, np.ndarray] = {}
    labels = grid.labels
    for part in PERSON_PARTS:
        cells = _component_cells(labels == int(part))
        if cells is not None:
            out[part] = cells
    return out


def decode_boxes(grid: LabelGrid, person: Box) -> dict[PartKind, Box]:
    """Partial map part -> box for every part with at least one grid cell."""
    out: dict[PartKind, Box] = {}
    for part, cells in decode_components(grid).items():
        extent = (
            int(cells[:, 0].min()),
            int(cells[:, 1].min()),
            int(cells[:, 0].max()),
            int(cells[:, 1].max()),
        )
        out[part] = _extent_to_box(extent, grid.shape, person)
    return out


def arm_endpoints(cells: Iterable[tuple[int, int]]) -> tuple[tuple[int, int], tuple[int, int]]:
    """The two component cells at maximum pairwise center distance.

    Tie-break: lexicographically smallest pair after sorting each pair in
    (row, col) order.  A single-cell component returns the cell twice.
    Note the tie-break means transposition equivariance is only guaranteed
    for components with a unique farthest pair.
    """
    pts = sorted((int(r), int(c)) for r, c in cells)
    if not pts:
        raise ValueError("empty arm component")
    if len(pts) == 1:
        return pts[0], pts[0]
    best_pair = None
    best_d2 = -1
    for i in range(len(pts)):
        r1, c1 = pts[i]
        for j in range(i + 1, len(pts)):
            r2, c2 = pts[j]
            d2 = (r1 - r2) ** 2 + (c1 - c2) ** 2
            # pts is sorted, so the first pair reaching a distance is the
            # lexicographic minimum among pairs at that distance
            if d2 > best_d2:
                best_d2 = d2
                best_pair = (pts[i], pts[j])
    assert best_pair is not None
    return best_pair


def _clip_to(box: Box, person: Box) -> Box:
    return Box(
        min(max(box.x0, person.x0), person.x1),
        min(max(box.y0, person.y0), person.y1),
        min(max(box.x1, person.x0), person.x1),
        min(max(box.y1, person.y0), person.y1),
    )


def _union(a: Box, b: Box) -> Box:
    return Box(min(a.x0, b.x0), min(a.y0, b.y0), max(a.x1, b.x1), max(a.y1, b.y1))


def normalize_box(box: Box, person: Box) -> Box:
    """Express an image-frame box in person-normalized coordinates.

    Coordinates are clamped to [0, 1] so priors built from boxes that poke
    outside the person box still satisfy the PriorTable invariant.
    """
    pw = person.width
    ph = person.height
    if pw <= 0 or ph <= 0:
        raise ValueError("degenerate person box")
    clamp = lambda v: min(max(v, 0.0), 1.0)
    return Box(
        clamp((box.x0 - person.x0) / pw),
        clamp((box.y0 - person.y0) / ph),
        clamp((box.x1 - person.x0) / pw),
        clamp((box.y1 - person.y0) / ph),
        frame=FRAME_PERSON_NORM,
    )


def denormalize_box(nbox: Box, person: Box) -> Box:
    pw = person.width
    ph = person.height
    return Box(
        person.x0 + nbox.x0 * pw,
        person.y0 + nbox.y0 * ph,
        person.x0 + nbox.x1 * pw,
        person.y0 + nbox.y1 * ph,
    )


def compute_priors(training: Sequence[InstanceAnnotation]) -> PriorTable:
    """Arithmetic mean of part boxes normalized to their person boxes."""
    sums = {p: np.zeros(4) for p in PERSON_PARTS}
    counts = {p: 0 for p in PERSON_PARTS}
    for a in training:
        if a.part_boxes is None:
            continue
        for part, box in a.part_boxes.items():
            n = normalize_box(box, a.person_box)
            sums[part] += (n.x0, n.y0, n.x1, n.y1)
            counts[part] += 1
    boxes = {}
    for part in PERSON_PARTS:
        if counts[part] == 0:
            raise ValueError(f"no training boxes for part {part.label!r}")
        x0, y0, x1, y1 = sums[part] / counts[part]
        boxes[part] = Box(x0, y0, x1, y1, frame=FRAME_PERSON_NORM)
    return PriorTable(boxes=boxes, counts=counts)


def _endpoint_boxes(
    arm_cells: Iterable[tuple[int, int]],
    person: Box,
    priors: PriorTable,
    cfg: PartLocConfig,
) -> tuple[Box, Box]:
    e1, e2 = arm_endpoints(arm_cells)
    pw = person.width
    ph = person.height
    hand_prior = priors.boxes.get(PartKind.HAND)
    if hand_prior is not None and hand_prior.width > 0 and hand_prior.height > 0:
        bw = hand_prior.width * pw
        bh = hand_prior.height * ph
    else:
        bw = cfg.endpoint_cells * pw / cfg.grid_width
        bh = cfg.endpoint_cells * ph / cfg.grid_height
    out = []
    for r, c in (e1, e2):
        cx = person.x0 + (c + 0.5) * pw / cfg.grid_width
        cy = person.y0 + (r + 0.5) * ph / cfg.grid_height
        out.append(_clip_to(Box(cx - bw / 2, cy - bh / 2, cx + bw / 2, cy + bh / 2), person))
    return out[0], out[1]


def complete_with_fallbacks(
    partial: Mapping[PartKind, Box],
    person: Box,
    priors: PriorTable,
    cfg: PartLocConfig | None = None,
    arm_cells: Iterable[tuple[int, int]] | None = None,
) -> PartBoxes:
    """Fill in every missing part so all five are present.

    Detected parts pass through.  A missing hand with a detected arm takes
    two fixed-size boxes centered on the arm endpoints (``arm_cells`` must
    then carry the arm component; the map entry is their union).  Every
    other missing part takes the prior mean box denormalized into the
    person box.
    """
    cfg = cfg or PartLocConfig()
    for part in PERSON_PARTS:
        if part not in priors.boxes:
            raise ValueError(f"priors missing part {part.label!r}")
    parts: dict[PartKind, LocatedPart] = {}
    hand_endpoints = None
    for part in PERSON_PARTS:
        if part in partial:
            parts[part] = LocatedPart(partial[part], PROV_DETECTED)
            continue
        if part is PartKind.HAND and PartKind.ARM in partial and arm_cells is not None:
            b1, b2 = _endpoint_boxes(arm_cells, person, priors, cfg)
            hand_endpoints = (b1, b2)
            parts[part] = LocatedPart(_union(b1, b2), PROV_ENDPOINT)
            continue
        parts[part] = LocatedPart(
            denormalize_box(priors.boxes[part], person), PROV_PRIOR
        )
    return PartBoxes(parts=parts, hand_endpoints=hand_endpoints)


def locate_parts(
    grid: LabelGrid,
    person: Box,
    priors: PriorTable,
    cfg: PartLocConfig | None = None,
) -> PartBoxes:
    """Decode a grid and complete it: the full localization step."""
    cfg = cfg or PartLocConfig(grid_height=grid.height, grid_width=grid.width)
    components = decode_components(grid)
    partial = {
        part: _extent_to_box(
            (
                int(cells[:, 0].min()),
                int(cells[:, 1].min()),
                int(cells[:, 0].max()),
                int(cells[:, 1].max()),
            ),
            grid.shape,
            person,
        )
        for part, cells in components.items()
    }
    arm = components.get(PartKind.ARM)
    arm_cells = [tuple(c) for c in arm] if arm is not None else None
    return complete_with_fallbacks(partial, person, priors, cfg, arm_cells=arm_cells)


# ---------------------------------------------------------------------------
# Boxes / priors text formats
# ---------------------------------------------------------------------------
# Boxes file: one instance per line, space separated:
#   <instance_id> then for each of the five parts in ordinal order:
#   <part> <provenance> <x0> <y0> <x1> <y1>
#   then optionally: ep <x0> <y0> <x1> <y1> ep <x0> <y0> <x1> <y1>
# Floats are written with repr and round-trip exactly.

def save_part_boxes(located: Sequence[tuple[str, PartBoxes]], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for instance_id, pb in located:
            if " " in instance_id:
                raise ValueError("instance ids may not contain spaces")
            fields = [instance_id]
            for part in PERSON_PARTS:
                lp = pb.parts[part]
                fields.append(part.label)
                fields.append(lp.provenance)
                fields.extend(repr(v) for v in lp.box.corners())
            if pb.hand_endpoints is not None:
                for ep in pb.hand_endpoints:
                    fields.append("ep")
                    fields.extend(repr(v) for v in ep.corners())
            fh.write(" ".join(fields) + "\n")


def load_part_boxes(path) -> list[tuple[str, PartBoxes]]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            fields = line.split()
            if not fields:
                continue
            instance_id = fields[0]
            pos = 1
            parts = {}
            for _ in range(5):
                try:
                    part = part_from_name(fields[pos])
                    prov = fields[pos + 1]
                    coords = [float(v) for v in fields[pos + 2:pos + 6]]
                except (IndexError, ValueError):
                    raise ValueError(f"{path}:{line_no}: malformed boxes line") from None
                if prov not in _PROVENANCES:
                    raise ValueError(f"{path}:{line_no}: bad provenance {prov!r}")
                parts[part] = LocatedPart(Box(*coords), prov)
                pos += 6
            endpoints = []
            while pos < len(fields):
                if fields[pos] != "ep":
                    raise ValueError(f"{path}:{line_no}: expected 'ep' marker")
                coords = [float(v) for v in fields[pos + 1:pos + 5]]
                if len(coords) != 4:
                    raise ValueError(f"{path}:{line_no}: truncated endpoint box")
                endpoints.append(Box(*coords))
                pos += 5
            if endpoints and len(endpoints) != 2:
                raise ValueError(f"{path}:{line_no}: expected exactly two endpoint boxes")
            out.append(
                (instance_id,
                 PartBoxes(parts=parts,
                           hand_endpoints=tuple(endpoints) if endpoints else None))
            )
    return out


def save_priors(priors: PriorTable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for part in PERSON_PARTS:
            b = priors.boxes[part]
            fh.write(
                f"{part.label} {priors.counts[part]} "
                f"{repr(b.x0)} {repr(b.y0)} {repr(b.x1)} {repr(b.y1)}\n"
            )


def load_priors(path) -> PriorTable:
    boxes = {}
    counts = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            fields = line.split()
            if not fields:
                continue
            part = part_from_name(fields[0])
            counts[part] = int(fields[1])
            x0, y0, x1, y1 = (float(v) for v in fields[2:6])
            boxes[part] = Box(x0, y0, x1, y1, frame=FRAME_PERSON_NORM)
    missing = [p.label for p in PERSON_PARTS if p not in boxes]
    if missing:
        raise ValueError(f"priors file missing parts: {', '.join(missing)}")
    return PriorTable(boxes=boxes, counts=counts)
