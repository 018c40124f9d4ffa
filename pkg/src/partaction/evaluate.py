"""Ranking metrics (AP / mAP), model evaluation, and the ablation protocol.

Average precision uses the classical precision-at-positive-ranks form:
sort by score descending (stable, so ties keep input order) and average
the precision at each positive's rank.  Sums go through ``math.fsum`` so
results do not depend on accumulation order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import PERSON_PARTS, InstanceAnnotation
from .features import FeatureStore
from .fusion import FusionConfig, OvrLinearModel, train_ovr
from .lda import select_parts
from .pipeline import assemble_dataset, lda_part_scores, stratified_split

__all__ = [
    "average_precision",
    "mean_ap",
    "EvalReport",
    "evaluate_ovr",
    "ABLATION_ROWS",
    "run_ablation",
    "format_report_table",
    "format_report_metrics",
]


def average_precision(scores: Sequence[float], labels: Sequence[bool]) -> float:
    """AP of a ranking: mean precision at the positive ranks."""
    scores = np.asarray(scores, dtype=np.float64)
    pos = np.asarray(labels, dtype=bool)
    if scores.shape != pos.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be 1-D and the same length")
    n_pos = int(np.count_nonzero(pos))
    if n_pos == 0:
        raise ValueError("average precision needs at least one positive")
    order = np.argsort(-scores, kind="stable")
    ranked = pos[order]
    tp = np.cumsum(ranked)
    ranks = np.nonzero(ranked)[0]
    return math.fsum(tp[r] / (r + 1) for r in ranks) / n_pos


def mean_ap(aps: Sequence[float]) -> float:
    """Unweighted mean of per-class APs."""
    if len(aps) == 0:
        raise ValueError("mean over zero classes")
    return math.fsum(aps) / len(aps)


@dataclass
class EvalReport:
    """One evaluation row: per-class APs plus optional context stats."""

    label: str
    per_class_ap: dict[str, float]
    map: float
    pixel_accuracy: float | None = None
    loc_stats: dict[str, dict[str, int]] | None = None


def evaluate_ovr(
    model: OvrLinearModel,
    samples,
    label: str = "eval",
) -> EvalReport:
    """Per-class AP of the model's raw decision values over fused samples."""
    if not samples:
        raise ValueError("empty evaluation set")
    x = np.stack([s.vector for s in samples])
    scores = x @ model.weights.T + model.biases
    truth = np.array([s.label.index for s in samples])
    per_class = {}
    for ci, cls in enumerate(model.classes):
        positives = truth == cls.index
        if not positives.any():
            raise ValueError(
                f"class {cls.name!r} has no positives in the evaluation set"
            )
        per_class[cls.name] = average_precision(scores[:, ci], positives)
    return EvalReport(
        label=label,
        per_class_ap=per_class,
        map=mean_ap(list(per_class.values())),
    )


ABLATION_ROWS = (
    "no parts",
    "part+N_b",
    "part+N_p",
    "part+N_b+N_p",
    "part+N_b+N_p (part selected)",
)


def _row_config(row: str, base: FusionConfig, selected: tuple) -> FusionConfig:
    all_parts = tuple(PERSON_PARTS)
    if row == "no parts":
        return FusionConfig(
            part_weight=base.part_weight, m=0, selected_parts=(),
            body_source=base.body_source, part_source=base.part_source,
            bbox_source=base.bbox_source, pool_endpoints=base.pool_endpoints,
        )
    if row == "part+N_b":
        return FusionConfig(
            part_weight=base.part_weight, m=5, selected_parts=all_parts,
            body_source=base.body_source, part_source=None,
            bbox_source=base.bbox_source, pool_endpoints=base.pool_endpoints,
        )
    if row == "part+N_p":
        return FusionConfig(
            part_weight=base.part_weight, m=5, selected_parts=all_parts,
            body_source=None, part_source=base.part_source,
            bbox_source=base.bbox_source, pool_endpoints=base.pool_endpoints,
        )
    if row == "part+N_b+N_p":
        return FusionConfig(
            part_weight=base.part_weight, m=5, selected_parts=all_parts,
            body_source=base.body_source, part_source=base.part_source,
            bbox_source=base.bbox_source, pool_endpoints=base.pool_endpoints,
        )
    if row == "part+N_b+N_p (part selected)":
        return FusionConfig(
            part_weight=base.part_weight, m=len(selected), selected_parts=selected,
            body_source=base.body_source, part_source=base.part_source,
            bbox_source=base.bbox_source, pool_endpoints=base.pool_endpoints,
        )
    raise ValueError(f"unknown ablation row {row!r}")


def run_ablation(
    annotations: Sequence[InstanceAnnotation],
    store: FeatureStore,
    seed: int = 0,
    penalty: float = 1.0,
    m: int = 2,
    part_weight: float = 0.5,
    ridge: float | None = None,
    test_fraction: float = 0.5,
    base: FusionConfig | None = None,
    pixel_accuracy: float | None = None,
) -> list[EvalReport]:
    """The five-row feature-combination study on one train/test split.

    Rows: bbox only; all five parts through the body source only; through
    the part source only; through both; and the top-m LDA-selected parts
    through both.  The split, seed, and penalty are shared by every row,
    so rows differ only in their fusion configuration.
    """
    base = base or FusionConfig(part_weight=part_weight)
    train, test = stratified_split(annotations, test_fraction, seed)
    part_scores = lda_part_scores(train, store, base, ridge)
    selected = tuple(select_parts(part_scores, m))
    rows = []
    for row in ABLATION_ROWS:
        cfg = _row_config(row, base, selected)
        model = train_ovr(assemble_dataset(train, store, cfg), penalty=penalty,
                          seed=seed)
        report = evaluate_ovr(model, assemble_dataset(test, store, cfg), label=row)
        report.pixel_accuracy = pixel_accuracy
        rows.append(report)
    return rows


def format_report_table(rows: Sequence[EvalReport]) -> str:
    """Text table: row label, mAP, then per-class AP columns."""
    class_names = sorted({n for r in rows for n in r.per_class_ap})
    width = max([len(r.label) for r in rows] + [len("method")])
    header = f"{'method':<{width}}  {'mAP':>8}" + "".join(
        f"  {n:>12}" for n in class_names
    )
    lines = [header]
    for r in rows:
        cells = "".join(
            f"  {r.per_class_ap.get(n, float('nan')):>12.4f}" for n in class_names
        )
        lines.append(f"{r.label:<{width}}  {r.map:>8.4f}{cells}")
    return "\n".join(lines) + "\n"


def format_report_metrics(rows: Sequence[EvalReport]) -> str:
    """Machine-readable variant: one tab-separated metric per line."""
    lines = []
    for r in rows:
        lines.append(f"{r.label}\tmAP\t{r.map!r}")
        for name in sorted(r.per_class_ap):
            lines.append(f"{r.label}\tAP[{name}]\t{r.per_class_ap[name]!r}")
        if r.pixel_accuracy is not None:
            lines.append(f"{r.label}\tpixel_accuracy\t{r.pixel_accuracy!r}")
        if r.loc_stats is not None:
            for part in sorted(r.loc_stats):
                for prov in sorted(r.loc_stats[part]):
                    lines.append(
                        f"{r.label}\tloc[{part}.{prov}]\t{r.loc_stats[part][prov]}"
                    )
    return "\n".join(lines) + "\n"
