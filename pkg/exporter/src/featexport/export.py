"""Export job runner and the PAF1 writer.

The annotation reader and feature writer here implement the documented
file formats directly; compatibility with the recognition pipeline is
contract-level, verified by the test suite loading exported files with the
pipeline's own reader.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .models import load_model

__all__ = ["ExportJob", "ExportSummary", "run_export", "write_paf1"]

VALID_TAGS = ("body-net", "part-net", "toy", "external")
PART_ORDER = ("head", "torso", "arm", "hand", "leg")
MAGIC = b"PAF1"


@dataclass(frozen=True)
class ExportJob:
    annotations: str | Path
    image_root: str | Path
    model: str
    tag: str = "body-net"
    output: str | Path = "features.paf"

    def __post_init__(self):
        if self.tag not in VALID_TAGS:
            raise ValueError(f"tag must be one of {VALID_TAGS}, got {self.tag!r}")


@dataclass
class ExportSummary:
    records: int
    instances: int
    skipped_images: int
    skipped_regions: int
    output: Path


def _read_annotations(path: Path) -> list[dict]:
    """Minimal JSONL reader: image id, person box, optional part boxes."""
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
            entry = {
                "image_id": str(rec["image_id"]),
                "person_box": [float(v) for v in rec["person_box"]],
                "part_boxes": {
                    name: [float(v) for v in box]
                    for name, box in rec.get("part_boxes", {}).items()
                },
            }
            out.append(entry)
    return out


def _crop(image: np.ndarray, box: list[float]) -> np.ndarray | None:
    h, w = image.shape
    x0, y0, x1, y1 = box
    r0 = max(0, int(np.floor(y0)))
    r1 = min(h, int(np.ceil(y1)))
    c0 = max(0, int(np.floor(x0)))
    c1 = min(w, int(np.ceil(x1)))
    if r1 <= r0 or c1 <= c0:
        return None
    return image[r0:r1, c0:c1]


def write_paf1(records: list[tuple[str, str, list[float], np.ndarray]],
               tag: str, dim: int, path: Path) -> None:
    """Write one-tag PAF1 bytes: sorted records, image-frame boxes.

    Each record is (instance id, region key, box corners, float values).
    """

    def w32(fh, v):
        fh.write(struct.pack("<I", v))

    def wstr(fh, s):
        raw = s.encode("utf-8")
        w32(fh, len(raw))
        fh.write(raw)

    with open(path, "wb") as fh:
        fh.write(MAGIC)
        w32(fh, 1)
        wstr(fh, tag)
        w32(fh, dim)
        ordered = sorted(records, key=lambda r: (r[0], r[1]))
        w32(fh, len(ordered))
        for instance_id, region_key, box, values in ordered:
            wstr(fh, instance_id)
            wstr(fh, region_key)
            w32(fh, 0)
            fh.write(struct.pack("<B", 0))  # image frame
            fh.write(struct.pack("<4d", *box))
            w32(fh, len(values))
            fh.write(np.asarray(values).astype("<f4").tobytes())


def run_export(job: ExportJob) -> ExportSummary:
    """Embed every annotated region and write the feature file.

    Regions are the person box ("bbox") plus any part boxes present.
    Instances whose image is missing or unreadable are skipped and counted
    in the summary rather than aborting the batch.
    """
    ann_path = Path(job.annotations)
    image_root = Path(job.image_root)
    model = load_model(job.model)
    annotations = _read_annotations(ann_path)
    records: list[tuple[str, str, list[float], np.ndarray]] = []
    skipped_images = 0
    skipped_regions = 0
    exported_instances = 0
    for entry in annotations:
        image_path = image_root / f"{entry['image_id']}.npy"
        try:
            image = np.load(image_path)
            if image.ndim != 2:
                raise ValueError("expected a 2-D grayscale array")
        except (OSError, ValueError):
            skipped_images += 1
            continue
        regions = [("bbox", entry["person_box"])]
        for name in PART_ORDER:
            if name in entry["part_boxes"]:
                regions.append((name, entry["part_boxes"][name]))
        for key, box in regions:
            crop = _crop(image, box)
            if crop is None:
                skipped_regions += 1
                continue
            records.append((entry["image_id"], key, box, model.embed(crop)))
        exported_instances += 1
    out_path = Path(job.output)
    write_paf1(records, job.tag, model.dim, out_path)
    return ExportSummary(
        records=len(records),
        instances=exported_instances,
        skipped_images=skipped_images,
        skipped_regions=skipped_regions,
        output=out_path,
    )
