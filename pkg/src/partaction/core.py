"""Core value types shared by the whole pipeline.

Everything here is a plain immutable record; computation lives in the other
modules.  Annotation files are JSON-lines: one self-contained object per
line, UTF-8, schema documented in :func:`save_annotations`.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "PartKind",
    "PERSON_PARTS",
    "part_from_name",
    "FRAME_IMAGE",
    "FRAME_PERSON_NORM",
    "FRAME_GRID",
    "FRAMES",
    "Box",
    "box_violations",
    "BodyActionLabel",
    "make_action_labels",
    "PartActionLabel",
    "LabelGrid",
    "SOURCE_TAGS",
    "FeatureVector",
    "InstanceAnnotation",
    "validate_annotation",
    "save_annotations",
    "load_annotations",
]


class PartKind(IntEnum):
    """The five body parts plus the background filler used in label grids.

    The ordinal order (head, torso, arm, hand, leg) is fixed and is the
    tie-break order everywhere in the pipeline.  BACKGROUND only labels
    grid cells; it is never a selectable part.
    """

    HEAD = 0
    TORSO = 1
    ARM = 2
    HAND = 3
    LEG = 4
    BACKGROUND = 5

    @property
    def label(self) -> str:
        return self.name.lower()


PERSON_PARTS: tuple[PartKind, ...] = (
    PartKind.HEAD,
    PartKind.TORSO,
    PartKind.ARM,
    PartKind.HAND,
    PartKind.LEG,
)

_NAME_TO_PART = {p.label: p for p in PartKind}


def part_from_name(name: str) -> PartKind:
    try:
        return _NAME_TO_PART[name.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown part name: {name!r}") from None


# Coordinate frames a Box can live in.
FRAME_IMAGE = "image"
FRAME_PERSON_NORM = "person-norm"
FRAME_GRID = "grid-cell"
FRAMES = (FRAME_IMAGE, FRAME_PERSON_NORM, FRAME_GRID)


@dataclass(frozen=True)
class Box:
    """Axis-aligned box.  Corners are (x0, y0) top-left, (x1, y1) bottom-right.

    Corners coerce to plain floats so text serialization stays clean no
    matter what numeric type produced them.  The record does not enforce
    corner order, so validators can report violations instead of crashing;
    use :func:`box_violations`.
    """

    x0: float
    y0: float
    x1: float
    y1: float
    frame: str = FRAME_IMAGE

    def __post_init__(self):
        for name in ("x0", "y0", "x1", "y1"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    def corners(self) -> tuple[float, float, float, float]:
        return (self.x0, self.y0, self.x1, self.y1)


def box_violations(box: Box) -> list[str]:
    """Check the Box invariants; returns rule names, empty when all hold."""
    out = []
    if not all(math.isfinite(v) for v in box.corners()):
        out.append("box coordinates not finite")
        return out
    if box.x0 > box.x1 or box.y0 > box.y1:
        out.append("box corner order")
    if box.frame == FRAME_PERSON_NORM and not (
        0.0 <= box.x0 and box.x1 <= 1.0 and 0.0 <= box.y0 and box.y1 <= 1.0
    ):
        out.append("normalized box outside [0,1]^2")
    if box.frame not in FRAMES:
        out.append("unknown coordinate frame")
    return out


@dataclass(frozen=True, order=True)
class BodyActionLabel:
    """A dataset-scoped whole-body action class.  Indices are dense 0..C-1."""

    index: int
    name: str


def make_action_labels(names: Sequence[str]) -> tuple[BodyActionLabel, ...]:
    """Build a dense label set from class names, indices in listed order."""
    if len(set(names)) != len(names):
        raise ValueError("duplicate body-action names")
    return tuple(BodyActionLabel(i, n) for i, n in enumerate(names))


@dataclass(frozen=True, order=True)
class PartActionLabel:
    """One entry of the fixed 40-category part-action taxonomy."""

    index: int
    part: PartKind
    name: str


class LabelGrid:
    """2-D grid of part labels (the coarse localization surface).

    Wraps a read-only integer array whose values are PartKind members.
    The canonical pipeline size is 16x16 but any positive shape is legal.
    """

    __slots__ = ("_labels",)

    def __init__(self, labels: np.ndarray):
        arr = np.asarray(labels)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError("label grid must be a non-empty 2-D array")
        if not np.issubdtype(arr.dtype, np.integer):
            raise ValueError("label grid must hold integer part values")
        lo, hi = int(arr.min()), int(arr.max())
        if lo < 0 or hi > int(PartKind.BACKGROUND):
            raise ValueError(f"grid holds invalid part value in [{lo}, {hi}]")
        arr = arr.astype(np.int8, copy=True)
        arr.setflags(write=False)
        self._labels = arr

    @classmethod
    def full(cls, height: int, width: int, part: PartKind) -> "LabelGrid":
        return cls(np.full((height, width), int(part), dtype=np.int8))

    @property
    def labels(self) -> np.ndarray:
        return self._labels

    @property
    def height(self) -> int:
        return self._labels.shape[0]

    @property
    def width(self) -> int:
        return self._labels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self._labels.shape  # type: ignore[return-value]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LabelGrid):
            return NotImplemented
        return self.shape == other.shape and bool(
            np.all(self._labels == other._labels)
        )

    def __hash__(self) -> int:
        return hash((self.shape, self._labels.tobytes()))

    def __repr__(self) -> str:
        return f"LabelGrid({self.height}x{self.width})"


# Canonical feature source tags.  "fused" marks vectors produced by
# concatenating a body-source and a part-source feature; it never appears
# in feature files, which only carry the first four.
SOURCE_TAGS = ("body-net", "part-net", "toy", "external", "fused")


class FeatureVector:
    """Fixed-dimension real feature attached to an image region."""

    __slots__ = ("_values", "source", "region")

    def __init__(self, values: np.ndarray, source: str, region: Box):
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("feature values must be a non-empty 1-D array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("feature values must be finite")
        if source not in SOURCE_TAGS:
            raise ValueError(f"unknown source tag: {source!r}")
        arr = arr.copy()
        arr.setflags(write=False)
        self._values = arr
        self.source = source
        self.region = region

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def dim(self) -> int:
        return int(self._values.shape[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FeatureVector):
            return NotImplemented
        return (
            self.source == other.source
            and self.region == other.region
            and self._values.shape == other._values.shape
            and bool(np.all(self._values == other._values))
        )

    def __hash__(self) -> int:
        return hash((self.source, self.region, self._values.tobytes()))

    def __repr__(self) -> str:
        return f"FeatureVector(dim={self.dim}, source={self.source!r})"


@dataclass(frozen=True)
class InstanceAnnotation:
    """One person instance: body box, body action, optional part data.

    ``image_size`` is (width, height).  Joints are (part, x, y) in image
    pixels.  ``part_mask`` is an image-resolution LabelGrid.  All optional
    mappings are keyed by PartKind.
    """

    image_id: str
    image_size: tuple[int, int]
    person_box: Box
    body_action: BodyActionLabel
    joints: tuple[tuple[PartKind, float, float], ...] | None = None
    part_mask: LabelGrid | None = None
    part_boxes: Mapping[PartKind, Box] | None = None
    part_actions: Mapping[PartKind, PartActionLabel] | None = None


def validate_annotation(a: InstanceAnnotation) -> list[str]:
    """Total validity check; returns a list of "field: rule" violations.

    Empty list means every invariant holds.
    """
    out: list[str] = []
    w, h = a.image_size
    if w < 1 or h < 1:
        out.append("image_size: non-positive image size")
    for rule in box_violations(a.person_box):
        out.append(f"person_box: {rule}")
    if a.body_action.index < 0:
        out.append("body_action: negative class index")
    if a.joints is not None:
        for i, (part, x, y) in enumerate(a.joints):
            if part not in PERSON_PARTS:
                out.append(f"joints[{i}]: not a person part")
            if not (math.isfinite(x) and math.isfinite(y)):
                out.append(f"joints[{i}]: joint coordinates not finite")
            elif not (0 <= x < w and 0 <= y < h):
                out.append(f"joints[{i}]: joint out of bounds")
    if a.part_mask is not None:
        if a.part_mask.shape != (h, w):
            out.append("part_mask: mask size differs from image size")
    if a.part_boxes is not None:
        for part, box in a.part_boxes.items():
            for rule in box_violations(box):
                out.append(f"part_boxes[{part.label}]: {rule}")
            if not box_violations(box):
                if box.x0 < 0 or box.y0 < 0 or box.x1 > w or box.y1 > h:
                    out.append(f"part_boxes[{part.label}]: box out of image bounds")
    if a.part_actions is not None:
        for part, lab in a.part_actions.items():
            if lab.part is not part:
                out.append(f"part_actions[{part.label}]: label belongs to another part")
    return out


# ---------------------------------------------------------------------------
# Annotation file format (JSON lines)
# ---------------------------------------------------------------------------

def _box_to_json(box: Box) -> list:
    return [box.x0, box.y0, box.x1, box.y1]


def _box_from_json(vals: Sequence[float], frame: str = FRAME_IMAGE) -> Box:
    x0, y0, x1, y1 = (float(v) for v in vals)
    return Box(x0, y0, x1, y1, frame=frame)


def _annotation_to_json(a: InstanceAnnotation) -> dict:
    rec: dict = {
        "image_id": a.image_id,
        "image_size": [int(a.image_size[0]), int(a.image_size[1])],
        "person_box": _box_to_json(a.person_box),
        "body_action": {"name": a.body_action.name, "index": a.body_action.index},
    }
    if a.joints is not None:
        rec["joints"] = [[p.label, float(x), float(y)] for p, x, y in a.joints]
    if a.part_mask is not None:
        g = a.part_mask
        rows = [
            " ".join(PartKind(v).label for v in g.labels[r])
            for r in range(g.height)
        ]
        rec["part_mask"] = {"size": [g.height, g.width], "rows": rows}
    if a.part_boxes is not None:
        rec["part_boxes"] = {
            p.label: _box_to_json(b)
            for p, b in sorted(a.part_boxes.items())
        }
    if a.part_actions is not None:
        rec["part_actions"] = {
            p.label: {"name": lab.name, "index": lab.index}
            for p, lab in sorted(a.part_actions.items())
        }
    return rec


def _annotation_from_json(rec: dict) -> InstanceAnnotation:
    joints = None
    if "joints" in rec:
        joints = tuple(
            (part_from_name(p), float(x), float(y)) for p, x, y in rec["joints"]
        )
    mask = None
    if "part_mask" in rec:
        m = rec["part_mask"]
        height, width = (int(v) for v in m["size"])
        arr = np.empty((height, width), dtype=np.int8)
        if len(m["rows"]) != height:
            raise ValueError("part_mask row count does not match size")
        for r, row in enumerate(m["rows"]):
            names = row.split()
            if len(names) != width:
                raise ValueError("part_mask row width does not match size")
            arr[r] = [int(part_from_name(n)) for n in names]
        mask = LabelGrid(arr)
    part_boxes = None
    if "part_boxes" in rec:
        part_boxes = {
            part_from_name(p): _box_from_json(v) for p, v in rec["part_boxes"].items()
        }
    part_actions = None
    if "part_actions" in rec:
        part_actions = {
            part_from_name(p): PartActionLabel(
                int(v["index"]), part_from_name(p), str(v["name"])
            )
            for p, v in rec["part_actions"].items()
        }
    ba = rec["body_action"]
    return InstanceAnnotation(
        image_id=str(rec["image_id"]),
        image_size=(int(rec["image_size"][0]), int(rec["image_size"][1])),
        person_box=_box_from_json(rec["person_box"]),
        body_action=BodyActionLabel(int(ba["index"]), str(ba["name"])),
        joints=joints,
        part_mask=mask,
        part_boxes=part_boxes,
        part_actions=part_actions,
    )


def save_annotations(annotations: Iterable[InstanceAnnotation], path) -> None:
    """Write annotations as JSON lines.

    Schema per line (object keys; optional keys omitted when absent)::

        image_id     str
        image_size   [width, height]
        person_box   [x0, y0, x1, y1]            image-pixel coordinates
        body_action  {"name": str, "index": int}
        joints       [[part, x, y], ...]
        part_mask    {"size": [H, W], "rows": ["head head ...", ...]}
        part_boxes   {part: [x0, y0, x1, y1], ...}
        part_actions {part: {"name": str, "index": int}, ...}

    Part names are the lower-case PartKind labels.  Floats round-trip
    exactly (JSON uses repr).
    """
    with open(path, "w", encoding="utf-8") as fh:
        for a in annotations:
            fh.write(json.dumps(_annotation_to_json(a), sort_keys=True))
            fh.write("\n")


def load_annotations(path) -> list[InstanceAnnotation]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{line_no}: bad JSON ({exc})") from None
            out.append(_annotation_from_json(rec))
    return out
