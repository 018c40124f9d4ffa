"""Per-part discriminativeness scoring via multiclass LDA.

For each part, the within-class and between-class scatter matrices of its
features are formed over all body-action classes, and the part's score is
the largest generalized eigenvalue of (S_b, S_w + ridge*I), i.e. the
maximum of the Rayleigh quotient w'S_b w / w'S_w w.  The top-M parts by
score are kept for fusion.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg

from .core import PartKind

__all__ = [
    "ScatterPair",
    "PartScore",
    "scatter_within",
    "scatter_between",
    "scatter_pair",
    "default_ridge",
    "part_score",
    "select_parts",
    "format_scores_report",
    "parse_scores_report",
]


@dataclass(frozen=True)
class ScatterPair:
    """Scatter matrices with the group statistics they were built from."""

    s_w: np.ndarray
    s_b: np.ndarray
    class_means: np.ndarray  # (C, d), rows in sorted class order
    global_mean: np.ndarray
    class_sizes: np.ndarray  # (C,)
    total: int


@dataclass(frozen=True)
class PartScore:
    """A part's LDA score with the maximizing unit direction."""

    part: PartKind
    score: float
    direction: np.ndarray
    ridge: float


def _as_groups(groups: Mapping[object, np.ndarray]) -> list[np.ndarray]:
    """Sorted-key group arrays, validated to share a dimension."""
    if not groups:
        raise ValueError("no classes given")
    out = []
    dim = None
    for key in sorted(groups):
        arr = np.asarray(groups[key], dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"class {key!r}: samples must be a 2-D array")
        if arr.shape[0] == 0:
            raise ValueError(f"class {key!r} is empty")
        if dim is None:
            dim = arr.shape[1]
        elif arr.shape[1] != dim:
            raise ValueError(
                f"class {key!r}: dim {arr.shape[1]} != {dim}"
            )
        out.append(arr)
    return out


def scatter_within(groups: Mapping[object, np.ndarray]) -> np.ndarray:
    """Sum over classes of the centered outer-product scatter.

    Classes are processed in sorted key order so the accumulation order is
    fixed and results are bit-reproducible.
    """
    arrs = _as_groups(groups)
    d = arrs[0].shape[1]
    s_w = np.zeros((d, d))
    for arr in arrs:
        centered = arr - arr.mean(axis=0)
        s_w += centered.T @ centered
    return s_w


def scatter_between(
    class_means: np.ndarray,
    class_sizes: Sequence[int],
    global_mean: np.ndarray,
) -> np.ndarray:
    """Size-weighted scatter of the class means about the global mean."""
    means = np.asarray(class_means, dtype=np.float64)
    sizes = np.asarray(class_sizes, dtype=np.float64)
    mu = np.asarray(global_mean, dtype=np.float64)
    if sizes.sum() <= 0:
        raise ValueError("total sample count must be positive")
    d = means.shape[1]
    s_b = np.zeros((d, d))
    for c in range(means.shape[0]):
        diff = mu - means[c]
        s_b += sizes[c] * np.outer(diff, diff)
    return s_b


def scatter_pair(groups: Mapping[object, np.ndarray]) -> ScatterPair:
    """Both scatters plus the statistics, from per-class sample arrays."""
    arrs = _as_groups(groups)
    sizes = np.array([a.shape[0] for a in arrs], dtype=np.int64)
    total = int(sizes.sum())
    class_means = np.stack([a.mean(axis=0) for a in arrs])
    global_mean = sum(a.sum(axis=0) for a in arrs) / total
    return ScatterPair(
        s_w=scatter_within(groups),
        s_b=scatter_between(class_means, sizes, global_mean),
        class_means=class_means,
        global_mean=global_mean,
        class_sizes=sizes,
        total=total,
    )


def default_ridge(s_w: np.ndarray) -> float:
    """Ridge used when none is given: 1e-6 * trace/d, floored at 1e-12.

    S_w is singular whenever the feature dim exceeds N - C, the normal
    regime for network features, so scoring regularizes by default.
    """
    d = s_w.shape[0]
    return max(1e-6 * float(np.trace(s_w)) / d, 1e-12)


def _first_nonzero_sign_fix(v: np.ndarray) -> np.ndarray:
    scale = np.max(np.abs(v))
    if scale == 0:
        return v
    idx = int(np.argmax(np.abs(v) > 1e-12 * scale))
    return -v if v[idx] < 0 else v


def part_score(
    part: PartKind,
    s_w: np.ndarray,
    s_b: np.ndarray,
    ridge: float | None = None,
) -> PartScore:
    """Largest generalized eigenvalue of (S_b, S_w + ridge*I) with its direction.

    ``ridge=None`` applies :func:`default_ridge`; ``ridge=0`` is only legal
    when S_w is nonsingular.  The returned direction has unit 2-norm and
    its first nonzero component positive.
    """
    s_w = np.asarray(s_w, dtype=np.float64)
    s_b = np.asarray(s_b, dtype=np.float64)
    if s_w.shape != s_b.shape or s_w.ndim != 2 or s_w.shape[0] != s_w.shape[1]:
        raise ValueError("scatter matrices must be square and same shape")
    if not (np.all(np.isfinite(s_w)) and np.all(np.isfinite(s_b))):
        raise ValueError("scatter matrices must be finite")
    if ridge is None:
        ridge = default_ridge(s_w)
    if ridge < 0:
        raise ValueError("ridge must be >= 0")
    d = s_w.shape[0]
    if ridge == 0:
        try:
            scipy.linalg.cholesky(s_w)
        except scipy.linalg.LinAlgError:
            raise ValueError("ridge must be > 0 when S_w is singular") from None
    if d == 1:
        score = float(s_b[0, 0] / (s_w[0, 0] + ridge))
        return PartScore(part, max(score, 0.0), np.array([1.0]), ridge)
    denom = s_w + ridge * np.eye(d)
    vals, vecs = scipy.linalg.eigh(s_b, denom)
    score = float(vals[-1])
    if score < 0:  # clamp eigensolver noise on PSD input
        score = 0.0
    v = vecs[:, -1]
    v = v / np.linalg.norm(v)
    return PartScore(part, score, _first_nonzero_sign_fix(v), ridge)


def select_parts(scores: Sequence[PartScore], m: int = 2) -> list[PartKind]:
    """Top-m parts by score, descending; ties break by part ordinal."""
    if not 1 <= m <= len(scores):
        raise ValueError(f"m must be in 1..{len(scores)}, got {m}")
    parts = [s.part for s in scores]
    if len(set(parts)) != len(parts):
        raise ValueError("duplicate parts in score list")
    ranked = sorted(scores, key=lambda s: (-s.score, int(s.part)))
    return [s.part for s in ranked[:m]]


def format_scores_report(scores: Sequence[PartScore], selected: Sequence[PartKind]) -> str:
    """Text table: part, score, ridge, selected flag."""
    sel = set(selected)
    lines = [f"{'part':<8} {'score':>24} {'ridge':>14} selected"]
    for s in sorted(scores, key=lambda s: (-s.score, int(s.part))):
        flag = "yes" if s.part in sel else "no"
        lines.append(f"{s.part.label:<8} {s.score!r:>24} {s.ridge:>14.6e} {flag}")
    return "\n".join(lines) + "\n"


def parse_scores_report(text: str) -> list[tuple[str, float, float, bool]]:
    """Inverse of :func:`format_scores_report` (part, score, ridge, selected)."""
    out = []
    for line in text.splitlines()[1:]:
        fields = line.split()
        if not fields:
            continue
        out.append((fields[0], float(fields[1]), float(fields[2]), fields[3] == "yes"))
    return out
