"""Glue between the feature store and the fusion/selection/classifier stages.

Region keys inside a FeatureStore are "bbox" for the person box and the
part label ("head", "hand", ...) for part regions; a hand located by the
arm-endpoint rule may instead appear as "hand.0"/"hand.1", which are
average-pooled on demand.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .core import PERSON_PARTS, InstanceAnnotation, PartKind
from .features import FeatureStore
from .fusion import FusedSample, FusionConfig, assemble, fuse_part, pool_hand_endpoints
from .lda import PartScore, part_score, scatter_pair

__all__ = [
    "BBOX_KEY",
    "region_key",
    "resolve_region_feature",
    "resolve_part_vector",
    "bbox_vector",
    "assemble_dataset",
    "lda_part_scores",
    "stratified_split",
]

BBOX_KEY = "bbox"


def region_key(part: PartKind) -> str:
    return part.label


def resolve_region_feature(
    store: FeatureStore,
    instance_id: str,
    part: PartKind,
    source: str,
    pool_endpoints: bool = True,
):
    """A part's feature under one source tag, pooling endpoint halves if needed."""
    fv = store.find(instance_id, part.label, source)
    if fv is not None:
        return fv
    if part is PartKind.HAND and pool_endpoints:
        f1 = store.find(instance_id, "hand.0", source)
        f2 = store.find(instance_id, "hand.1", source)
        if f1 is not None and f2 is not None:
            return pool_hand_endpoints(f1, f2)
    raise KeyError(
        f"no {source!r} feature for instance {instance_id!r} part {part.label!r}"
    )


def resolve_part_vector(
    store: FeatureStore,
    instance_id: str,
    part: PartKind,
    cfg: FusionConfig,
) -> np.ndarray:
    """The fused per-part feature f^(k) under the configured sources."""
    if cfg.body_source is not None and cfg.part_source is not None:
        f_b = resolve_region_feature(store, instance_id, part, cfg.body_source,
                                     cfg.pool_endpoints)
        f_p = resolve_region_feature(store, instance_id, part, cfg.part_source,
                                     cfg.pool_endpoints)
        return fuse_part(f_b, f_p, cfg.body_source, cfg.part_source).values
    source = cfg.body_source if cfg.body_source is not None else cfg.part_source
    assert source is not None
    return resolve_region_feature(store, instance_id, part, source,
                                  cfg.pool_endpoints).values


def bbox_vector(store: FeatureStore, instance_id: str, cfg: FusionConfig) -> np.ndarray:
    fv = store.find(instance_id, BBOX_KEY, cfg.bbox_source)
    if fv is None:
        raise KeyError(
            f"no {cfg.bbox_source!r} bbox feature for instance {instance_id!r}"
        )
    return fv.values


def assemble_dataset(
    annotations: Sequence[InstanceAnnotation],
    store: FeatureStore,
    cfg: FusionConfig,
) -> list[FusedSample]:
    out = []
    for a in annotations:
        parts = {
            p: resolve_part_vector(store, a.image_id, p, cfg)
            for p in cfg.selected_parts
        }
        out.append(
            assemble(a.image_id, a.body_action, bbox_vector(store, a.image_id, cfg),
                     parts, cfg)
        )
    return out


def lda_part_scores(
    annotations: Sequence[InstanceAnnotation],
    store: FeatureStore,
    cfg: FusionConfig,
    ridge: float | None = None,
) -> list[PartScore]:
    """Score all five parts on the given (training) instances.

    Each part is scored on the same fused f^(k) that fusion would use.
    """
    scores = []
    for part in PERSON_PARTS:
        groups: dict = {}
        for a in annotations:
            vec = resolve_part_vector(store, a.image_id, part, cfg)
            groups.setdefault(a.body_action, []).append(vec)
        arrays = {lab: np.stack(vs) for lab, vs in groups.items()}
        pair = scatter_pair(arrays)
        scores.append(part_score(part, pair.s_w, pair.s_b, ridge))
    return scores


def stratified_split(
    annotations: Sequence[InstanceAnnotation],
    test_fraction: float = 0.5,
    seed: int = 0,
) -> tuple[list[InstanceAnnotation], list[InstanceAnnotation]]:
    """Deterministic per-class shuffle-and-cut split; ids sorted within splits."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    by_class: dict = {}
    for a in sorted(annotations, key=lambda a: a.image_id):
        by_class.setdefault(a.body_action, []).append(a)
    train: list[InstanceAnnotation] = []
    test: list[InstanceAnnotation] = []
    for label in sorted(by_class):
        group = by_class[label]
        order = rng.permutation(len(group))
        n_test = int(round(len(group) * test_fraction))
        for pos, idx in enumerate(order):
            (test if pos < n_test else train).append(group[idx])
    train.sort(key=lambda a: a.image_id)
    test.sort(key=lambda a: a.image_id)
    return train, test
