"""Single-image body-action recognition from semantic part actions.

A desk-scale numpy/scipy pipeline: coarse part localization targets and
decoding, a 40-category part-action layer, LDA-based discriminative part
selection, weighted feature fusion, one-vs-rest linear max-margin
classification, and AP/mAP evaluation.
"""

__version__ = "0.1.0"

from .core import (
    PERSON_PARTS,
    BodyActionLabel,
    Box,
    FeatureVector,
    InstanceAnnotation,
    LabelGrid,
    PartActionLabel,
    PartKind,
    load_annotations,
    make_action_labels,
    save_annotations,
    validate_annotation,
)
from .evaluate import EvalReport, average_precision, mean_ap, run_ablation
from .features import (
    FeatureFileError,
    FeatureStore,
    ToyExtractorConfig,
    extract_toy,
    load_features,
    save_features,
)
from .fusion import (
    FusedSample,
    FusionConfig,
    OvrLinearModel,
    assemble,
    fuse_part,
    pool_hand_endpoints,
    predict_label,
    predict_scores,
    train_ovr,
)
from .grids import GridGenConfig, joints_to_grid, pixel_accuracy, resize_nearest
from .lda import PartScore, part_score, scatter_between, scatter_within, select_parts
from .localize import (
    PartBoxes,
    PriorTable,
    arm_endpoints,
    complete_with_fallbacks,
    compute_priors,
    decode_boxes,
    locate_parts,
)
from .part_actions import (
    PartActionModel,
    part_action_accuracy,
    predict_part_action,
    taxonomy,
    train_part_action,
)
from .synth import SynthConfig, SynthDataset, synth_generate

__all__ = [
    "__version__",
    "PERSON_PARTS",
    "BodyActionLabel",
    "Box",
    "FeatureVector",
    "InstanceAnnotation",
    "LabelGrid",
    "PartActionLabel",
    "PartKind",
    "load_annotations",
    "make_action_labels",
    "save_annotations",
    "validate_annotation",
    "EvalReport",
    "average_precision",
    "mean_ap",
    "run_ablation",
    "FeatureFileError",
    "FeatureStore",
    "ToyExtractorConfig",
    "extract_toy",
    "load_features",
    "save_features",
    "FusedSample",
    "FusionConfig",
    "OvrLinearModel",
    "assemble",
    "fuse_part",
    "pool_hand_endpoints",
    "predict_label",
    "predict_scores",
    "train_ovr",
    "GridGenConfig",
    "joints_to_grid",
    "pixel_accuracy",
    "resize_nearest",
    "PartScore",
    "part_score",
    "scatter_between",
    "scatter_within",
    "select_parts",
    "PartBoxes",
    "PriorTable",
    "arm_endpoints",
    "complete_with_fallbacks",
    "compute_priors",
    "decode_boxes",
    "locate_parts",
    "PartActionModel",
    "part_action_accuracy",
    "predict_part_action",
    "taxonomy",
    "train_part_action",
    "SynthConfig",
    "SynthDataset",
    "synth_generate",
]
