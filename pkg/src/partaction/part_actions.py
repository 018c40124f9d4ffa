"""The 40-category part-action taxonomy and a per-part linear classifier.

Each body part owns a fixed set of semantic action labels (10 head, 4
torso, 6 arm, 14 hand, 6 leg).  The classifier is one multinomial logistic
model per part over pluggable region features; its pre-softmax score
vector doubles as the part-network feature fed to fusion.
"""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import FeatureVector, PartActionLabel, PartKind

__all__ = [
    "PART_ACTION_NAMES",
    "taxonomy",
    "labels_for",
    "taxonomy_hash",
    "PartActionTrainConfig",
    "PartActionModel",
    "softmax_loss_and_grad",
    "train_part_action",
    "predict_part_action",
    "part_action_scores",
    "part_action_accuracy",
    "save_part_action_model",
    "load_part_action_model",
]

# Fixed taxonomy, grouped by part in ordinal order; label indices are
# assigned densely in this listing order (0..39).
PART_ACTION_NAMES: dict[PartKind, tuple[str, ...]] = {
    PartKind.HEAD: (
        "breathing out",
        "drinking",
        "laughing",
        "looking up",
        "looking down",
        "looking through",
        "normal",
        "speaking",
        "tooth brushing",
        "sucking",
    ),
    PartKind.TORSO: (
        "bending",
        "fading away",
        "normal",
        "lying",
    ),
    PartKind.ARM: (
        "curving (up)",
        "curving (down)",
        "slack (up)",
        "slack (down)",
        "straight (up)",
        "straight (down)",
    ),
    PartKind.HAND: (
        "cutting",
        "merging",
        "printing",
        "proping",
        "slack",
        "supporting",
        "washing",
        "waving",
        "writing",
        "holding a bottle",
        "holding a stick",
        "holding a phone",
        "holding a camera",
        "holding a cigarette",
    ),
    PartKind.LEG: (
        "crouching",
        "forking",
        "running",
        "sitting",
        "standing",
        "walking",
    ),
}

_TAXONOMY: tuple[PartActionLabel, ...] | None = None


def taxonomy() -> tuple[PartActionLabel, ...]:
    """The fixed 40-label list, indices dense in part-ordinal order."""
    global _TAXONOMY
    if _TAXONOMY is None:
        labels = []
        idx = 0
        for part in (PartKind.HEAD, PartKind.TORSO, PartKind.ARM,
                     PartKind.HAND, PartKind.LEG):
            for name in PART_ACTION_NAMES[part]:
                labels.append(PartActionLabel(idx, part, name))
                idx += 1
        _TAXONOMY = tuple(labels)
    return _TAXONOMY


def labels_for(part: PartKind) -> tuple[PartActionLabel, ...]:
    return tuple(lab for lab in taxonomy() if lab.part is part)


def taxonomy_hash() -> str:
    """SHA-256 over the canonical (index, part, name) listing."""
    h = hashlib.sha256()
    for lab in taxonomy():
        h.update(f"{lab.index}\x1f{lab.part.label}\x1f{lab.name}\x1e".encode("utf-8"))
    return h.hexdigest()


@dataclass(frozen=True)
class PartActionTrainConfig:
    learning_rate: float = 0.5
    epochs: int = 300
    l2: float = 1e-4
    seed: int = 0


@dataclass
class PartActionModel:
    """Per-part multinomial logistic model over the part's taxonomy labels.

    ``weights[p]`` has shape (labels of p, feature dim); rows follow the
    taxonomy order of that part's labels.
    """

    weights: dict[PartKind, np.ndarray]
    biases: dict[PartKind, np.ndarray]
    dim: int
    config: PartActionTrainConfig


def softmax_loss_and_grad(
    w: np.ndarray,
    b: np.ndarray,
    x: np.ndarray,
    y: np.ndarray,
    l2: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy of softmax(x @ w.T + b) plus 0.5*l2*||w||^2.

    ``y`` holds row indices into w.  Returns (loss, grad_w, grad_b).
    """
    n = x.shape[0]
    z = x @ w.T + b
    z -= z.max(axis=1, keepdims=True)
    ez = np.exp(z)
    p = ez / ez.sum(axis=1, keepdims=True)
    ll = z[np.arange(n), y] - np.log(ez.sum(axis=1))
    loss = -ll.mean() + 0.5 * l2 * float((w * w).sum())
    p[np.arange(n), y] -= 1.0
    grad_w = p.T @ x / n + l2 * w
    grad_b = p.mean(axis=0)
    return float(loss), grad_w, grad_b


def _train_one_part(
    x: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    cfg: PartActionTrainConfig,
) -> tuple[np.ndarray, np.ndarray]:
    """Monotone full-batch gradient descent from zero init.

    Steps that would increase the loss are rejected and the step size
    halved, so the final loss never exceeds the initial one; accepted
    steps grow the step size again.  Zero init plus deterministic
    arithmetic makes retraining bit-identical.
    """
    w = np.zeros((n_classes, x.shape[1]))
    b = np.zeros(n_classes)
    step = cfg.learning_rate
    loss, gw, gb = softmax_loss_and_grad(w, b, x, y, cfg.l2)
    for _ in range(cfg.epochs):
        w_new = w - step * gw
        b_new = b - step * gb
        loss_new, gw_new, gb_new = softmax_loss_and_grad(w_new, b_new, x, y, cfg.l2)
        if loss_new <= loss:
            w, b, loss, gw, gb = w_new, b_new, loss_new, gw_new, gb_new
            step *= 1.2
        else:
            step *= 0.5
    return w, b


def train_part_action(
    train: Sequence[tuple[FeatureVector, PartActionLabel]],
    cfg: PartActionTrainConfig | None = None,
    seed: int | None = None,
) -> PartActionModel:
    """Train one multinomial model per part present in the training data."""
    cfg = cfg or PartActionTrainConfig()
    if seed is not None:
        cfg = PartActionTrainConfig(cfg.learning_rate, cfg.epochs, cfg.l2, seed)
    if not train:
        raise ValueError("empty training set")
    canonical = {(lab.part, lab.name): lab for lab in taxonomy()}
    dim = train[0][0].dim
    by_part: dict[PartKind, list[tuple[np.ndarray, int]]] = {}
    for fv, lab in train:
        if fv.dim != dim:
            raise ValueError(f"inconsistent feature dims: {fv.dim} vs {dim}")
        if canonical.get((lab.part, lab.name)) != lab:
            raise ValueError(f"label {lab} is not in the taxonomy")
        part_labels = labels_for(lab.part)
        cls = part_labels.index(lab)
        by_part.setdefault(lab.part, []).append((fv.values, cls))
    weights = {}
    biases = {}
    for part in sorted(by_part):
        rows = by_part[part]
        x = np.stack([r[0] for r in rows])
        y = np.array([r[1] for r in rows], dtype=np.int64)
        w, b = _train_one_part(x, y, len(labels_for(part)), cfg)
        weights[part] = w
        biases[part] = b
    return PartActionModel(weights=weights, biases=biases, dim=dim, config=cfg)


def part_action_scores(
    model: PartActionModel, part: PartKind, f: FeatureVector | np.ndarray
) -> np.ndarray:
    """Pre-softmax scores over the part's labels (the part-net feature)."""
    vals = f.values if isinstance(f, FeatureVector) else np.asarray(f, dtype=np.float64)
    if part not in model.weights:
        raise ValueError(f"model has no classifier for part {part.label!r}")
    if vals.shape[0] != model.dim:
        raise ValueError(f"feature dim {vals.shape[0]} != model dim {model.dim}")
    return model.weights[part] @ vals + model.biases[part]


def embedded_scores(
    model: PartActionModel, part: PartKind, f: FeatureVector | np.ndarray
) -> np.ndarray:
    """Part scores embedded at their taxonomy indices in a 40-dim vector.

    Lets score features of all parts live under one store tag (which
    requires a shared dimension) while keeping each part's block disjoint.
    """
    out = np.zeros(len(taxonomy()))
    scores = part_action_scores(model, part, f)
    for lab, v in zip(labels_for(part), scores):
        out[lab.index] = v
    return out


def predict_part_action(
    model: PartActionModel, part: PartKind, f: FeatureVector | np.ndarray
) -> np.ndarray:
    """Probability vector over the part's labels; sums to 1."""
    z = part_action_scores(model, part, f)
    z = z - z.max()
    ez = np.exp(z)
    return ez / ez.sum()


def part_action_accuracy(
    model: PartActionModel,
    eval_set: Sequence[tuple[FeatureVector, PartActionLabel]],
) -> float:
    """Fraction of argmax predictions matching; argmax ties take the lowest index."""
    if not eval_set:
        raise ValueError("empty evaluation set")
    hits = 0
    for fv, lab in eval_set:
        probs = predict_part_action(model, lab.part, fv)
        pred = int(np.argmax(probs))
        part_labels = labels_for(lab.part)
        if part_labels[pred] == lab:
            hits += 1
    return hits / len(eval_set)


# ---------------------------------------------------------------------------
# Model file: magic PAM1, version, taxonomy hash, per-part weights (f64).
# Loading refuses files whose taxonomy hash differs from the running one.
# ---------------------------------------------------------------------------

_PAM_MAGIC = b"PAM1"
_PAM_VERSION = 1


def save_part_action_model(model: PartActionModel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_PAM_MAGIC)
        fh.write(struct.pack("<I", _PAM_VERSION))
        fh.write(bytes.fromhex(taxonomy_hash()))
        cfg = model.config
        fh.write(struct.pack("<ddIq", cfg.learning_rate, cfg.l2, cfg.epochs, cfg.seed))
        fh.write(struct.pack("<II", model.dim, len(model.weights)))
        for part in sorted(model.weights):
            w = model.weights[part]
            fh.write(struct.pack("<BI", int(part), w.shape[0]))
            fh.write(w.astype("<f8").tobytes())
            fh.write(model.biases[part].astype("<f8").tobytes())


def load_part_action_model(path) -> PartActionModel:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _PAM_MAGIC:
        raise ValueError(f"{path}: bad magic {data[:4]!r}, expected {_PAM_MAGIC!r}")
    pos = 4
    (version,) = struct.unpack_from("<I", data, pos)
    pos += 4
    if version != _PAM_VERSION:
        raise ValueError(f"{path}: unsupported model version {version}")
    file_hash = data[pos:pos + 32].hex()
    pos += 32
    if file_hash != taxonomy_hash():
        raise ValueError(
            f"{path}: taxonomy hash mismatch (file {file_hash[:12]}..., "
            f"current {taxonomy_hash()[:12]}...)"
        )
    lr, l2, epochs, seed = struct.unpack_from("<ddIq", data, pos)
    pos += 8 + 8 + 4 + 8
    dim, n_parts = struct.unpack_from("<II", data, pos)
    pos += 8
    weights = {}
    biases = {}
    for _ in range(n_parts):
        part_v, n_cls = struct.unpack_from("<BI", data, pos)
        pos += 5
        part = PartKind(part_v)
        expected = len(labels_for(part))
        if n_cls != expected:
            raise ValueError(
                f"{path}: part {part.label!r} has {n_cls} classes, expected {expected}"
            )
        w = np.frombuffer(data, dtype="<f8", count=n_cls * dim, offset=pos).reshape(
            n_cls, dim
        ).copy()
        pos += 8 * n_cls * dim
        b = np.frombuffer(data, dtype="<f8", count=n_cls, offset=pos).copy()
        pos += 8 * n_cls
        weights[part] = w
        biases[part] = b
    if pos != len(data):
        raise ValueError(f"{path}: trailing bytes in model file")
    return PartActionModel(
        weights=weights,
        biases=biases,
        dim=int(dim),
        config=PartActionTrainConfig(lr, int(epochs), l2, int(seed)),
    )
