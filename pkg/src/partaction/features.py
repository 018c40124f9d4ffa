"""Feature extraction boundary: toy extractor and the PAF1 feature file.

The pipeline never runs a neural network.  Features either come from the
deterministic toy extractor below (histograms over a region crop) or are
loaded from a "PAF1" file produced by an external exporter.

PAF1 binary layout (little-endian throughout)::

    magic   4 bytes  b"PAF1"
    u32     T        number of source tags
    T times:
        u32 n, n bytes   tag name (UTF-8)
        u32              declared feature dim for this tag
    u32     R        number of records
    R times:
        u32 n, n bytes   instance id (UTF-8)
        u32 n, n bytes   region key (UTF-8)
        u32              tag index into the table above
        u8               region frame code (0 image, 1 person-norm, 2 grid-cell)
        4 x f64          region box x0, y0, x1, y1
        u32              dim (must equal the tag's declared dim)
        dim x f32        feature values

Values are stored as 32-bit floats and widened to float64 in memory, so a
store round-trips bit-exactly iff its values are exactly representable in
float32 (anything that came out of a PAF1 file is).  Tags are written in
sorted name order and records in sorted key order, making the bytes a
deterministic function of the store contents.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .core import (
    FRAME_GRID,
    FRAME_IMAGE,
    FRAME_PERSON_NORM,
    Box,
    FeatureVector,
)

__all__ = [
    "ToyExtractorConfig",
    "extract_toy",
    "mirror_permutation",
    "FeatureStore",
    "FeatureFileError",
    "save_features",
    "load_features",
    "merge_stores",
]

MAGIC = b"PAF1"
_FRAME_CODES = {FRAME_IMAGE: 0, FRAME_PERSON_NORM: 1, FRAME_GRID: 2}
_FRAME_NAMES = {v: k for k, v in _FRAME_CODES.items()}


class FeatureFileError(ValueError):
    """Raised for malformed PAF1 files (magic, truncation, dim mismatch)."""


@dataclass(frozen=True)
class ToyExtractorConfig:
    """Histogram layout of the toy region feature."""

    intensity_bins: int = 8
    orientation_bins: int = 8
    pool_rows: int = 2
    pool_cols: int = 2

    def __post_init__(self):
        for nm in ("intensity_bins", "orientation_bins", "pool_rows", "pool_cols"):
            if getattr(self, nm) < 1:
                raise ValueError(f"{nm} must be >= 1")

    @property
    def dim(self) -> int:
        return self.pool_rows * self.pool_cols * (
            self.intensity_bins + self.orientation_bins
        )


def _crop_indices(region: Box, shape: tuple[int, int]) -> tuple[int, int, int, int]:
    h, w = shape
    r0 = max(0, int(np.floor(region.y0)))
    r1 = min(h, int(np.ceil(region.y1)))
    c0 = max(0, int(np.floor(region.x0)))
    c1 = min(w, int(np.ceil(region.x1)))
    if r1 <= r0 or c1 <= c0:
        raise ValueError("region does not intersect the image")
    return r0, r1, c0, c1


def extract_toy(
    image: np.ndarray,
    region: Box,
    cfg: ToyExtractorConfig | None = None,
) -> FeatureVector:
    """Pooled intensity + gradient-orientation histograms of a region crop.

    The crop is split into a ``pool_rows x pool_cols`` grid.  Per cell:
    an intensity histogram (values clipped to [0, 1), equal-width bins,
    normalized to sum 1) and a gradient-orientation histogram (votes
    weighted by gradient magnitude, normalized to sum 1; all-zero when the
    cell has no gradient).  Cell blocks concatenate row-major as
    [intensity, orientation] and the whole vector is L2-normalized (left
    as zeros if it is all zero).  Deterministic; horizontally mirroring
    image and region permutes the vector by :func:`mirror_permutation`
    when the crop width is even.
    """
    cfg = cfg or ToyExtractorConfig()
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2 or img.size == 0:
        raise ValueError("image must be a non-empty 2-D grayscale array")
    r0, r1, c0, c1 = _crop_indices(region, img.shape)
    crop = img[r0:r1, c0:c1]
    ch, cw = crop.shape

    # gradients; a 1-wide axis has no central difference, use zeros there
    gy = np.gradient(crop, axis=0) if ch > 1 else np.zeros_like(crop)
    gx = np.gradient(crop, axis=1) if cw > 1 else np.zeros_like(crop)
    mag = np.hypot(gx, gy)
    theta = np.mod(np.arctan2(gy, gx), 2.0 * np.pi)
    obins = np.minimum(
        (theta * (cfg.orientation_bins / (2.0 * np.pi))).astype(np.int64),
        cfg.orientation_bins - 1,
    )
    ibins = np.minimum(
        (np.clip(crop, 0.0, 1.0) * cfg.intensity_bins).astype(np.int64),
        cfg.intensity_bins - 1,
    )

    row_edges = [(i * ch) // cfg.pool_rows for i in range(cfg.pool_rows + 1)]
    col_edges = [(j * cw) // cfg.pool_cols for j in range(cfg.pool_cols + 1)]
    blocks = []
    for i in range(cfg.pool_rows):
        for j in range(cfg.pool_cols):
            sl = (slice(row_edges[i], row_edges[i + 1]),
                  slice(col_edges[j], col_edges[j + 1]))
            n = (row_edges[i + 1] - row_edges[i]) * (col_edges[j + 1] - col_edges[j])
            ih = np.bincount(ibins[sl].ravel(), minlength=cfg.intensity_bins).astype(
                np.float64
            )
            if n > 0:
                ih /= n
            oh = np.bincount(
                obins[sl].ravel(),
                weights=mag[sl].ravel(),
                minlength=cfg.orientation_bins,
            )
            total = oh.sum()
            if total > 0:
                oh = oh / total
            blocks.append(ih)
            blocks.append(oh)
    vec = np.concatenate(blocks)
    norm = np.linalg.norm(vec)
    if norm > 0:
        vec = vec / norm
    return FeatureVector(vec, source="toy", region=region)


def mirror_permutation(cfg: ToyExtractorConfig | None = None) -> np.ndarray:
    """Index permutation p with feature(mirrored) == feature(original)[p].

    Horizontal mirroring swaps pooling columns, keeps intensity bins, and
    maps orientation bin k to (B/2 - 1 - k) mod B (orientations reflect as
    pi - theta).  Exact for even-width crops and generic gradients; an
    orientation exactly on a bin boundary may land in the neighbor bin.
    """
    cfg = cfg or ToyExtractorConfig()
    bi, bo = cfg.intensity_bins, cfg.orientation_bins
    block = bi + bo
    perm = np.empty(cfg.dim, dtype=np.int64)
    for i in range(cfg.pool_rows):
        for j in range(cfg.pool_cols):
            dst = (i * cfg.pool_cols + j) * block
            src = (i * cfg.pool_cols + (cfg.pool_cols - 1 - j)) * block
            perm[dst:dst + bi] = np.arange(src, src + bi)
            for k in range(bo):
                perm[dst + bi + k] = src + bi + (bo // 2 - 1 - k) % bo
    return perm


class FeatureStore:
    """Features keyed by (instance id, region key, source tag).

    All vectors under one source tag share a dimension, declared the first
    time the tag appears.  Treat a store as immutable once loaded.
    """

    def __init__(self):
        self._data: dict[tuple[str, str, str], FeatureVector] = {}
        self._dims: dict[str, int] = {}

    @property
    def dims(self) -> dict[str, int]:
        return dict(self._dims)

    def add(self, instance_id: str, region_key: str, fv: FeatureVector) -> None:
        key = (instance_id, region_key, fv.source)
        if key in self._data:
            raise ValueError(f"duplicate feature key {key}")
        declared = self._dims.get(fv.source)
        if declared is None:
            self._dims[fv.source] = fv.dim
        elif declared != fv.dim:
            raise ValueError(
                f"dim {fv.dim} != declared dim {declared} for tag {fv.source!r}"
            )
        self._data[key] = fv

    def get(self, instance_id: str, region_key: str, source: str) -> FeatureVector:
        return self._data[(instance_id, region_key, source)]

    def find(self, instance_id: str, region_key: str, source: str) -> FeatureVector | None:
        return self._data.get((instance_id, region_key, source))

    def keys(self) -> list[tuple[str, str, str]]:
        return sorted(self._data)

    def __contains__(self, key: tuple[str, str, str]) -> bool:
        return key in self._data

    def __len__(self) -> int:
        return len(self._data)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FeatureStore):
            return NotImplemented
        return self._dims == other._dims and self._data == other._data

    def __repr__(self) -> str:
        return f"FeatureStore({len(self)} records, tags={sorted(self._dims)})"


def merge_stores(stores) -> FeatureStore:
    """Union of several stores; duplicate keys or dim conflicts are errors.

    Lets single-tag files from separate exporter runs (body network, part
    network) feed one pipeline run.
    """
    merged = FeatureStore()
    for store in stores:
        for key in store.keys():
            merged.add(key[0], key[1], store.get(*key))
    return merged


def _w32(fh, v: int) -> None:
    fh.write(struct.pack("<I", v))


def _wstr(fh, s: str) -> None:
    raw = s.encode("utf-8")
    _w32(fh, len(raw))
    fh.write(raw)


def save_features(store: FeatureStore, path) -> None:
    tags = sorted(store.dims)
    tag_index = {t: i for i, t in enumerate(tags)}
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        _w32(fh, len(tags))
        for t in tags:
            _wstr(fh, t)
            _w32(fh, store.dims[t])
        keys = store.keys()
        _w32(fh, len(keys))
        for instance_id, region_key, source in keys:
            fv = store.get(instance_id, region_key, source)
            _wstr(fh, instance_id)
            _wstr(fh, region_key)
            _w32(fh, tag_index[source])
            fh.write(struct.pack("<B", _FRAME_CODES[fv.region.frame]))
            fh.write(struct.pack("<4d", *fv.region.corners()))
            _w32(fh, fv.dim)
            fh.write(fv.values.astype("<f4").tobytes())


class _Reader:
    def __init__(self, data: bytes, path):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FeatureFileError(f"{self.path}: truncated feature file")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def string(self) -> str:
        n = self.u32()
        return self.take(n).decode("utf-8")


def load_features(path) -> FeatureStore:
    with open(path, "rb") as fh:
        data = fh.read()
    rd = _Reader(data, path)
    magic = rd.take(4)
    if magic != MAGIC:
        raise FeatureFileError(
            f"{path}: bad magic {magic!r}, expected {MAGIC!r}"
        )
    n_tags = rd.u32()
    tags = []
    dims = {}
    for _ in range(n_tags):
        name = rd.string()
        dim = rd.u32()
        if name in dims:
            raise FeatureFileError(f"{path}: duplicate tag {name!r}")
        tags.append(name)
        dims[name] = dim
    store = FeatureStore()
    n_records = rd.u32()
    for _ in range(n_records):
        instance_id = rd.string()
        region_key = rd.string()
        tag_idx = rd.u32()
        if tag_idx >= len(tags):
            raise FeatureFileError(f"{path}: tag index {tag_idx} out of range")
        tag = tags[tag_idx]
        frame_code = rd.take(1)[0]
        if frame_code not in _FRAME_NAMES:
            raise FeatureFileError(f"{path}: unknown frame code {frame_code}")
        x0, y0, x1, y1 = struct.unpack("<4d", rd.take(32))
        dim = rd.u32()
        if dim != dims[tag]:
            raise FeatureFileError(
                f"{path}: record dim {dim} != declared dim {dims[tag]} for tag {tag!r}"
            )
        values = np.frombuffer(rd.take(4 * dim), dtype="<f4").astype(np.float64)
        fv = FeatureVector(
            values, source=tag, region=Box(x0, y0, x1, y1, frame=_FRAME_NAMES[frame_code])
        )
        store.add(instance_id, region_key, fv)
    if rd.pos != len(data):
        raise FeatureFileError(f"{path}: {len(data) - rd.pos} trailing bytes")
    return store
