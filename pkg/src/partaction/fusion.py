"""Feature fusion and the one-vs-rest linear max-margin classifier.

A final sample is ``[f_bbox, w_p * f^(1), ..., w_p * f^(M)]``: the person
box feature unweighted, each selected part's feature scaled by the part
weight (0.5 by default).  Per-part features are the concatenation of the
body-source and part-source vectors for that part's region.

The classifier trains one binary soft-margin linear SVM per body-action
class, minimizing ``0.5*||w||^2 + C * sum_i hinge(1 - y_i*(w.x_i + b))``
exactly (unregularized bias) by pairwise dual coordinate ascent with a
duality-gap stopping rule.  Training is deterministic: pair selection is
by first-index argmax and the bias is the midpoint of the primal-optimal
flat interval.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .core import BodyActionLabel, Box, FeatureVector, PartKind, part_from_name

__all__ = [
    "FusionConfig",
    "FusedSample",
    "fuse_part",
    "pool_hand_endpoints",
    "assemble",
    "OvrLinearModel",
    "train_ovr",
    "predict_scores",
    "predict_label",
    "save_ovr_model",
    "load_ovr_model",
    "save_scores_file",
    "load_scores_file",
]


@dataclass(frozen=True)
class FusionConfig:
    """How final samples are assembled.

    ``body_source``/``part_source`` name the store tags feeding each half
    of a part feature; set one to None to use the other alone (the
    single-network ablation rows).  ``bbox_source`` feeds the person-box
    block.  With ``pool_endpoints`` on, a hand located by the arm-endpoint
    rule contributes the elementwise mean of its two endpoint features.
    """

    part_weight: float = 0.5
    m: int = 2
    selected_parts: tuple[PartKind, ...] = ()
    body_source: str | None = "body-net"
    part_source: str | None = "part-net"
    bbox_source: str = "body-net"
    pool_endpoints: bool = True

    def __post_init__(self):
        if not self.part_weight > 0:
            raise ValueError("part_weight must be > 0")
        if len(set(self.selected_parts)) != len(self.selected_parts):
            raise ValueError("selected parts must be distinct")
        if self.body_source is None and self.part_source is None:
            raise ValueError("at least one of body/part source must be set")
        if self.m < 0:
            raise ValueError("m must be >= 0")


@dataclass(frozen=True)
class FusedSample:
    instance_id: str
    vector: np.ndarray
    label: BodyActionLabel


def fuse_part(
    f_b: FeatureVector,
    f_p: FeatureVector,
    body_source: str = "body-net",
    part_source: str = "part-net",
) -> FeatureVector:
    """Concatenate a body-source and a part-source feature of one region."""
    if f_b.source != body_source:
        raise ValueError(f"body feature tagged {f_b.source!r}, expected {body_source!r}")
    if f_p.source != part_source:
        raise ValueError(f"part feature tagged {f_p.source!r}, expected {part_source!r}")
    return FeatureVector(
        np.concatenate([f_b.values, f_p.values]), source="fused", region=f_b.region
    )


def pool_hand_endpoints(f1: FeatureVector, f2: FeatureVector) -> FeatureVector:
    """Elementwise mean of the two endpoint-region features."""
    if f1.dim != f2.dim:
        raise ValueError(f"endpoint feature dims differ: {f1.dim} vs {f2.dim}")
    if f1.source != f2.source:
        raise ValueError(f"endpoint sources differ: {f1.source!r} vs {f2.source!r}")
    r1, r2 = f1.region, f2.region
    region = Box(
        min(r1.x0, r2.x0), min(r1.y0, r2.y0),
        max(r1.x1, r2.x1), max(r1.y1, r2.y1),
        frame=r1.frame,
    )
    return FeatureVector((f1.values + f2.values) / 2.0, source=f1.source, region=region)


def assemble(
    instance_id: str,
    label: BodyActionLabel,
    f_bbox: FeatureVector | np.ndarray,
    part_features: Mapping[PartKind, np.ndarray],
    cfg: FusionConfig,
) -> FusedSample:
    """Build the final vector: bbox block unweighted, part blocks scaled.

    Part blocks follow ``cfg.selected_parts`` order; with m = 0 the sample
    is the bbox feature alone.
    """
    if len(cfg.selected_parts) != cfg.m:
        raise ValueError(
            f"{len(cfg.selected_parts)} selected parts but m={cfg.m}"
        )
    bbox_vals = f_bbox.values if isinstance(f_bbox, FeatureVector) else np.asarray(
        f_bbox, dtype=np.float64
    )
    blocks = [bbox_vals]
    for part in cfg.selected_parts:
        if part not in part_features:
            raise ValueError(f"missing feature for selected part {part.label!r}")
        blocks.append(cfg.part_weight * np.asarray(part_features[part], dtype=np.float64))
    vec = np.concatenate(blocks)
    if not np.all(np.isfinite(vec)):
        raise ValueError("fused vector has non-finite entries")
    return FusedSample(instance_id=instance_id, vector=vec, label=label)


# ---------------------------------------------------------------------------
# One-vs-rest linear SVM
# ---------------------------------------------------------------------------

@dataclass
class OvrLinearModel:
    """One binary linear classifier per body-action class.

    ``dual_coefs`` keeps each binary problem's alpha/C in [0, 1] for
    optimality diagnostics; it is not serialized.
    """

    classes: tuple[BodyActionLabel, ...]
    weights: np.ndarray  # (C, d)
    biases: np.ndarray  # (C,)
    penalty: float
    seed: int
    dim: int
    dual_coefs: tuple[np.ndarray, ...] | None = field(default=None, repr=False)


def _optimal_bias(scores: np.ndarray, y: np.ndarray, n_pos: int) -> float:
    """Exact minimizer of the hinge sum over the bias, given w.

    The hinge sum is piecewise linear in b with breakpoints ``y_i - s_i``
    and slope rising by one per breakpoint from -P; the minimum is the
    flat interval after the P-th sorted breakpoint, and we take its
    midpoint for determinism.
    """
    breaks = np.sort(y - scores)
    return float((breaks[n_pos - 1] + breaks[n_pos]) / 2.0)


def _smo_binary(
    x: np.ndarray,
    y: np.ndarray,
    penalty: float,
    gap_tol: float,
    kkt_tol: float,
    max_steps: int,
) -> tuple[np.ndarray, float, np.ndarray]:
    """Dual pairwise coordinate ascent for one binary soft-margin SVM.

    Maintains sum(alpha*y) = 0 from a zero start, picks the most violating
    pair each step, and stops once the KKT violation and the relative
    duality gap (with the primal-optimal bias) both clear their tolerances.
    Returns (w, b, alpha).
    """
    n = x.shape[0]
    n_pos = int(np.count_nonzero(y > 0))
    k = x @ x.T
    kd = np.diag(k).copy()
    alpha = np.zeros(n)
    g = -np.ones(n)  # g_i = (Q alpha)_i - 1
    pos = y > 0

    def converged(violation: float) -> bool:
        if violation > kkt_tol:
            return False
        ay = alpha * y
        scores = k @ ay
        w_norm2 = float(ay @ scores)
        b = _optimal_bias(scores, y, n_pos)
        hinge = np.maximum(0.0, 1.0 - y * (scores + b))
        primal = 0.5 * w_norm2 + penalty * float(hinge.sum())
        dual = float(alpha.sum()) - 0.5 * w_norm2
        return primal - dual <= gap_tol * max(1.0, abs(primal))

    for _ in range(max_steps):
        up = (pos & (alpha < penalty)) | (~pos & (alpha > 0))
        low = (~pos & (alpha < penalty)) | (pos & (alpha > 0))
        myg = -y * g
        i = int(np.argmax(np.where(up, myg, -np.inf)))
        j = int(np.argmin(np.where(low, myg, np.inf)))
        violation = myg[i] - myg[j]
        if converged(violation):
            break
        curv = kd[i] + kd[j] - 2.0 * k[i, j]
        if y[i] > 0:
            t_max = penalty - alpha[i]
        else:
            t_max = alpha[i]
        if y[j] > 0:
            t_max = min(t_max, alpha[j])
        else:
            t_max = min(t_max, penalty - alpha[j])
        if curv > 0:
            t = min(violation / curv, t_max)
        else:
            t = t_max
        old_i, old_j = alpha[i], alpha[j]
        alpha[i] = min(max(old_i + y[i] * t, 0.0), penalty)
        alpha[j] = min(max(old_j - y[j] * t, 0.0), penalty)
        da_i = alpha[i] - old_i
        da_j = alpha[j] - old_j
        g += (da_i * y[i]) * (y * k[:, i]) + (da_j * y[j]) * (y * k[:, j])
    else:
        raise RuntimeError(
            f"SVM dual solver did not converge in {max_steps} steps"
        )
    ay = alpha * y
    w = x.T @ ay
    b = _optimal_bias(k @ ay, y, n_pos)
    return w, b, alpha


def train_ovr(
    samples: Sequence[FusedSample],
    penalty: float = 1.0,
    seed: int = 0,
    gap_tol: float = 1e-6,
    kkt_tol: float = 1e-6,
    max_steps: int = 500_000,
) -> OvrLinearModel:
    """Train one binary max-margin classifier per body-action class.

    ``penalty`` is the per-sample hinge weight C.  The solver itself is
    deterministic; ``seed`` is recorded for provenance only.
    """
    if not samples:
        raise ValueError("empty training set")
    if penalty <= 0:
        raise ValueError("penalty must be > 0")
    dim = samples[0].vector.shape[0]
    for s in samples:
        if s.vector.shape[0] != dim:
            raise ValueError(
                f"inconsistent sample dims: {s.vector.shape[0]} vs {dim}"
            )
    classes = tuple(sorted({s.label for s in samples}))
    if len(classes) < 2:
        raise ValueError("need at least two body-action classes")
    x = np.stack([s.vector for s in samples])
    labels = np.array([s.label.index for s in samples])
    weights = np.empty((len(classes), dim))
    biases = np.empty(len(classes))
    duals = []
    for ci, cls in enumerate(classes):
        y = np.where(labels == cls.index, 1.0, -1.0)
        w, b, alpha = _smo_binary(x, y, penalty, gap_tol, kkt_tol, max_steps)
        weights[ci] = w
        biases[ci] = b
        duals.append(alpha / penalty)
    return OvrLinearModel(
        classes=classes,
        weights=weights,
        biases=biases,
        penalty=penalty,
        seed=seed,
        dim=dim,
        dual_coefs=tuple(duals),
    )


def predict_scores(model: OvrLinearModel, f: np.ndarray) -> np.ndarray:
    """Raw per-class decision values w_c . f + b_c (no normalization)."""
    vec = np.asarray(f, dtype=np.float64)
    if vec.shape != (model.dim,):
        raise ValueError(f"feature shape {vec.shape} != ({model.dim},)")
    return model.weights @ vec + model.biases


def predict_label(model: OvrLinearModel, f: np.ndarray) -> BodyActionLabel:
    """Argmax class; ties resolve to the lowest class index."""
    return model.classes[int(np.argmax(predict_scores(model, f)))]


# ---------------------------------------------------------------------------
# Model and scores files
# ---------------------------------------------------------------------------

_OVR_MAGIC = b"OVR1"
_OVR_VERSION = 1


def fusion_config_to_json(cfg: FusionConfig) -> dict:
    return {
        "part_weight": cfg.part_weight,
        "m": cfg.m,
        "selected_parts": [p.label for p in cfg.selected_parts],
        "body_source": cfg.body_source,
        "part_source": cfg.part_source,
        "bbox_source": cfg.bbox_source,
        "pool_endpoints": cfg.pool_endpoints,
    }


def fusion_config_from_json(rec: dict) -> FusionConfig:
    return FusionConfig(
        part_weight=float(rec["part_weight"]),
        m=int(rec["m"]),
        selected_parts=tuple(part_from_name(p) for p in rec["selected_parts"]),
        body_source=rec["body_source"],
        part_source=rec["part_source"],
        bbox_source=rec["bbox_source"],
        pool_endpoints=bool(rec["pool_endpoints"]),
    )


def save_ovr_model(model: OvrLinearModel, path, fusion_config: FusionConfig | None = None) -> None:
    """Versioned binary: weights as float64 plus a fusion-config echo."""
    echo = json.dumps(
        fusion_config_to_json(fusion_config) if fusion_config else None,
        sort_keys=True,
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_OVR_MAGIC)
        fh.write(struct.pack("<I", _OVR_VERSION))
        fh.write(struct.pack("<dqII", model.penalty, model.seed, model.dim,
                             len(model.classes)))
        for ci, cls in enumerate(model.classes):
            raw = cls.name.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<i", cls.index))
            fh.write(model.weights[ci].astype("<f8").tobytes())
            fh.write(struct.pack("<d", model.biases[ci]))
        fh.write(struct.pack("<I", len(echo)))
        fh.write(echo)


def load_ovr_model(path) -> tuple[OvrLinearModel, FusionConfig | None]:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _OVR_MAGIC:
        raise ValueError(f"{path}: bad magic {data[:4]!r}, expected {_OVR_MAGIC!r}")
    pos = 4
    (version,) = struct.unpack_from("<I", data, pos)
    pos += 4
    if version != _OVR_VERSION:
        raise ValueError(f"{path}: unsupported model version {version}")
    penalty, seed, dim, n_classes = struct.unpack_from("<dqII", data, pos)
    pos += 8 + 8 + 4 + 4
    classes = []
    weights = np.empty((n_classes, dim))
    biases = np.empty(n_classes)
    for ci in range(n_classes):
        (n,) = struct.unpack_from("<I", data, pos)
        pos += 4
        name = data[pos:pos + n].decode("utf-8")
        pos += n
        (index,) = struct.unpack_from("<i", data, pos)
        pos += 4
        classes.append(BodyActionLabel(index, name))
        weights[ci] = np.frombuffer(data, dtype="<f8", count=dim, offset=pos)
        pos += 8 * dim
        (biases[ci],) = struct.unpack_from("<d", data, pos)
        pos += 8
    (n_echo,) = struct.unpack_from("<I", data, pos)
    pos += 4
    echo = json.loads(data[pos:pos + n_echo].decode("utf-8"))
    pos += n_echo
    if pos != len(data):
        raise ValueError(f"{path}: trailing bytes in model file")
    model = OvrLinearModel(
        classes=tuple(classes),
        weights=weights,
        biases=biases,
        penalty=float(penalty),
        seed=int(seed),
        dim=int(dim),
    )
    return model, (fusion_config_from_json(echo) if echo is not None else None)


def save_scores_file(
    rows: Sequence[tuple[str, np.ndarray]],
    classes: Sequence[BodyActionLabel],
    path,
) -> None:
    """Text scores: header with class names, then one instance per line."""
    names = [c.name for c in classes]
    for nm in names:
        if " " in nm:
            raise ValueError(f"class name with space cannot be serialized: {nm!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# classes: " + " ".join(names) + "\n")
        for instance_id, scores in rows:
            if " " in instance_id:
                raise ValueError("instance ids may not contain spaces")
            fh.write(instance_id + " " + " ".join(repr(float(v)) for v in scores) + "\n")


def load_scores_file(path) -> tuple[list[str], list[tuple[str, np.ndarray]]]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("# classes: "):
            raise ValueError(f"{path}: missing scores header")
        names = header[len("# classes: "):].split()
        rows = []
        for line in fh:
            fields = line.split()
            if not fields:
                continue
            if len(fields) != len(names) + 1:
                raise ValueError(f"{path}: score row width mismatch")
            rows.append((fields[0], np.array([float(v) for v in fields[1:]])))
    return names, rows
