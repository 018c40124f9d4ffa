"""Command-line entry point.

Every subcommand resolves its options from an optional JSON config file
plus flags (flags win), validates inputs up front, writes its artifacts
into ``--out``, and finishes with a ``manifest.json`` echoing the resolved
config, the seed, and content hashes of all inputs.  No timestamps are
recorded, so identical config + seed reproduce byte-identical artifacts.

Errors exit nonzero with a single machine-parsable line on stderr::

    error: <category>: <detail>

Categories: input-missing, input-invalid, config-invalid, format-error,
internal.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .core import (
    PERSON_PARTS,
    FeatureVector,
    InstanceAnnotation,
    PartKind,
    load_annotations,
    save_annotations,
    validate_annotation,
)
from .evaluate import (
    evaluate_ovr,
    format_report_table,
    format_report_metrics,
    run_ablation,
)
from .features import (
    FeatureFileError,
    FeatureStore,
    ToyExtractorConfig,
    extract_toy,
    load_features,
    merge_stores,
    save_features,
)
from .fusion import (
    FusionConfig,
    load_ovr_model,
    predict_scores,
    save_ovr_model,
    save_scores_file,
    train_ovr,
)
from .grids import (
    GridGenConfig,
    joints_to_grid,
    load_grid,
    pixel_accuracy,
    resize_nearest,
    save_grid,
)
from .lda import format_scores_report, select_parts
from .localize import (
    compute_priors,
    load_priors,
    locate_parts,
    save_part_boxes,
    save_priors,
)
from .part_actions import (
    embedded_scores,
    load_part_action_model,
    part_action_accuracy,
    PartActionTrainConfig,
    save_part_action_model,
    train_part_action,
)
from .pipeline import assemble_dataset, lda_part_scores, resolve_region_feature
from .synth import SynthConfig, synth_generate

WORKERS_ENV = "PARTACTION_WORKERS"

CATEGORY_INPUT_MISSING = "input-missing"
CATEGORY_INPUT_INVALID = "input-invalid"
CATEGORY_CONFIG_INVALID = "config-invalid"
CATEGORY_FORMAT_ERROR = "format-error"
CATEGORY_INTERNAL = "internal"


class CliError(Exception):
    def __init__(self, category: str, message: str):
        super().__init__(message)
        self.category = category


def _workers() -> int:
    try:
        n = int(os.environ.get(WORKERS_ENV, "1"))
    except ValueError:
        raise CliError(CATEGORY_CONFIG_INVALID, f"bad {WORKERS_ENV} value")
    return max(1, n)


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _hash_input(path: Path) -> str:
    if path.is_dir():
        h = hashlib.sha256()
        for p in sorted(path.rglob("*")):
            if p.is_file():
                h.update(str(p.relative_to(path)).encode())
                h.update(bytes.fromhex(_sha256_file(p)))
        return h.hexdigest()
    return _sha256_file(path)


def _require(path_str: str | None, what: str) -> Path:
    if not path_str:
        raise CliError(CATEGORY_CONFIG_INVALID, f"{what} is required")
    path = Path(path_str)
    if not path.exists():
        raise CliError(CATEGORY_INPUT_MISSING, f"{what} not found: {path}")
    return path


def _write_manifest(out: Path, subcommand: str, resolved: dict, inputs: dict[str, Path],
                    outputs: list[str]) -> None:
    manifest = {
        "tool": {"name": "partaction", "version": __version__},
        "subcommand": subcommand,
        "seed": resolved.get("seed"),
        "config": {k: v for k, v in sorted(resolved.items())},
        "inputs": {name: _hash_input(p) for name, p in sorted(inputs.items())},
        "outputs": sorted(outputs),
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def _out_dir(resolved: dict) -> Path:
    out = resolved.get("out")
    if not out:
        raise CliError(CATEGORY_CONFIG_INVALID, "--out is required")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _parse_sources(spec: str) -> tuple[str | None, str | None, str]:
    parts = [s.strip() for s in spec.split(",")]
    if len(parts) != 3:
        raise CliError(
            CATEGORY_CONFIG_INVALID,
            "--sources must be BODY,PART,BBOX (use 'none' to disable one)",
        )
    body = None if parts[0] == "none" else parts[0]
    part = None if parts[1] == "none" else parts[1]
    if parts[2] == "none":
        raise CliError(CATEGORY_CONFIG_INVALID, "bbox source cannot be 'none'")
    return body, part, parts[2]


def _fusion_config(resolved: dict, selected=()) -> FusionConfig:
    body, part, bbox = _parse_sources(resolved["sources"])
    return FusionConfig(
        part_weight=resolved.get("part_weight", 0.5),
        m=len(selected),
        selected_parts=tuple(selected),
        body_source=body,
        part_source=part,
        bbox_source=bbox,
        pool_endpoints=True,
    )


def _load_features_arg(spec: str | None) -> tuple[FeatureStore, dict[str, Path]]:
    """Load --features, which may be a comma-separated list of PAF files."""
    if not spec:
        raise CliError(CATEGORY_CONFIG_INVALID, "--features is required")
    paths = []
    for i, part in enumerate(spec.split(",")):
        part = part.strip()
        if not part:
            raise CliError(CATEGORY_CONFIG_INVALID, "empty path in --features list")
        paths.append(_require(part, f"--features[{i}]"))
    stores = [load_features(p) for p in paths]
    if len(stores) == 1:
        store = stores[0]
    else:
        store = merge_stores(stores)
    inputs = {f"features[{i}]": p for i, p in enumerate(paths)} if len(paths) > 1 \
        else {"features": paths[0]}
    return store, inputs


def _load_annotations_checked(path: Path) -> list[InstanceAnnotation]:
    annotations = load_annotations(path)
    if not annotations:
        raise CliError(CATEGORY_INPUT_INVALID, f"no instances in {path}")
    bad = []
    for a in annotations:
        violations = validate_annotation(a)
        if violations:
            bad.append(f"{a.image_id}: {violations[0]}")
    if bad:
        raise CliError(CATEGORY_INPUT_INVALID, f"invalid annotations ({bad[0]})")
    return annotations


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_synth(resolved: dict) -> None:
    out = _out_dir(resolved)
    cfg = SynthConfig(
        seed=resolved["seed"],
        n_classes=resolved["classes"],
        per_class=resolved["per_class"],
        body_dim=resolved["body_dim"],
        part_dim=resolved["part_dim"],
        snr=resolved["snr"],
        bbox_snr=resolved["bbox_snr"],
        grid_noise=resolved["grid_noise"],
    )
    ds = synth_generate(cfg)
    outputs = ["annotations.jsonl", "features.paf"]
    save_annotations(ds.annotations, out / "annotations.jsonl")
    save_features(ds.store, out / "features.paf")
    for sub, grids in (("grids_gt", ds.gt_grids), ("grids_pred", ds.pred_grids)):
        (out / sub).mkdir(exist_ok=True)
        for instance_id in sorted(grids):
            save_grid(grids[instance_id], out / sub / f"{instance_id}.grid")
            outputs.append(f"{sub}/{instance_id}.grid")
    (out / "images").mkdir(exist_ok=True)
    for instance_id in sorted(ds.images):
        np.save(out / "images" / f"{instance_id}.npy", ds.images[instance_id])
        outputs.append(f"images/{instance_id}.npy")
    _write_manifest(out, "synth", resolved, {}, outputs)


def _cmd_gridlab(resolved: dict) -> None:
    out = _out_dir(resolved)
    ann_path = _require(resolved.get("annotations"), "--annotations")
    annotations = _load_annotations_checked(ann_path)
    size = resolved["grid_size"]
    gcfg = GridGenConfig(target_height=size, target_width=size)
    (out / "grids").mkdir(exist_ok=True)
    outputs = []
    made = {}
    skipped = 0
    for a in annotations:
        if a.part_mask is not None:
            grid = resize_nearest(a.part_mask, (size, size))
        elif a.joints:
            full = joints_to_grid(a.joints, a.image_size, gcfg)
            grid = resize_nearest(full, (size, size))
        else:
            skipped += 1
            continue
        save_grid(grid, out / "grids" / f"{a.image_id}.grid")
        outputs.append(f"grids/{a.image_id}.grid")
        made[a.image_id] = grid
    inputs = {"annotations": ann_path}
    lines = [f"instances {len(annotations)}", f"grids {len(made)}",
             f"skipped {skipped}"]
    if resolved.get("compare"):
        ref_dir = _require(resolved["compare"], "--compare")
        inputs["compare"] = ref_dir
        accs = []
        for instance_id in sorted(made):
            ref_path = ref_dir / f"{instance_id}.grid"
            if ref_path.exists():
                accs.append(pixel_accuracy(made[instance_id], load_grid(ref_path)))
        if not accs:
            raise CliError(CATEGORY_INPUT_INVALID,
                           "no reference grids matched generated grids")
        lines.append(f"compared {len(accs)}")
        lines.append(f"mean_pixel_accuracy {math.fsum(accs) / len(accs)!r}")
    (out / "accuracy.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    outputs.append("accuracy.txt")
    _write_manifest(out, "gridlab", resolved, inputs, outputs)


def _cmd_localize(resolved: dict) -> None:
    out = _out_dir(resolved)
    ann_path = _require(resolved.get("annotations"), "--annotations")
    grids_dir = _require(resolved.get("grids"), "--grids")
    annotations = _load_annotations_checked(ann_path)
    inputs = {"annotations": ann_path, "grids": grids_dir}
    if resolved.get("priors"):
        priors_path = _require(resolved["priors"], "--priors")
        priors = load_priors(priors_path)
        inputs["priors"] = priors_path
    elif resolved.get("train_annotations"):
        tr_path = _require(resolved["train_annotations"], "--train-annotations")
        priors = compute_priors(_load_annotations_checked(tr_path))
        inputs["train_annotations"] = tr_path
    else:
        raise CliError(CATEGORY_CONFIG_INVALID,
                       "either --priors or --train-annotations is required")
    located = []
    stats = {p.label: {"detected": 0, "endpoint": 0, "prior": 0} for p in PERSON_PARTS}
    for a in annotations:
        grid_path = grids_dir / f"{a.image_id}.grid"
        if not grid_path.exists():
            raise CliError(CATEGORY_INPUT_MISSING,
                           f"grid for instance {a.image_id!r} not found")
        pb = locate_parts(load_grid(grid_path), a.person_box, priors)
        located.append((a.image_id, pb))
        for part in PERSON_PARTS:
            stats[part.label][pb.parts[part].provenance] += 1
    save_part_boxes(located, out / "boxes.txt")
    save_priors(priors, out / "priors.txt")
    stat_lines = [
        f"{part} {prov} {stats[part][prov]}"
        for part in sorted(stats)
        for prov in ("detected", "endpoint", "prior")
    ]
    (out / "loc_stats.txt").write_text("\n".join(stat_lines) + "\n", encoding="utf-8")
    _write_manifest(out, "localize", resolved, inputs,
                    ["boxes.txt", "priors.txt", "loc_stats.txt"])


def _cmd_extract(resolved: dict) -> None:
    from .localize import load_part_boxes

    out = _out_dir(resolved)
    ann_path = _require(resolved.get("annotations"), "--annotations")
    images_dir = _require(resolved.get("images"), "--images")
    annotations = _load_annotations_checked(ann_path)
    inputs = {"annotations": ann_path, "images": images_dir}
    cfg = ToyExtractorConfig(
        intensity_bins=resolved["intensity_bins"],
        orientation_bins=resolved["orientation_bins"],
        pool_rows=resolved["pool"],
        pool_cols=resolved["pool"],
    )
    boxes_by_id = {}
    if resolved.get("boxes"):
        boxes_path = _require(resolved["boxes"], "--boxes")
        boxes_by_id = dict(load_part_boxes(boxes_path))
        inputs["boxes"] = boxes_path
    part_model = None
    if resolved.get("part_model"):
        model_path = _require(resolved["part_model"], "--part-model")
        part_model = load_part_action_model(model_path)
        inputs["part_model"] = model_path

    def regions_for(a: InstanceAnnotation):
        regions = [("bbox", a.person_box)]
        pb = boxes_by_id.get(a.image_id)
        if pb is not None:
            for part in PERSON_PARTS:
                lp = pb.parts[part]
                if part is PartKind.HAND and pb.hand_endpoints is not None:
                    regions.append(("hand.0", pb.hand_endpoints[0]))
                    regions.append(("hand.1", pb.hand_endpoints[1]))
                else:
                    regions.append((part.label, lp.box))
        return regions

    def extract_one(a: InstanceAnnotation):
        img_path = images_dir / f"{a.image_id}.npy"
        if not img_path.exists():
            raise CliError(CATEGORY_INPUT_MISSING,
                           f"image for instance {a.image_id!r} not found")
        image = np.load(img_path)
        return [(key, extract_toy(image, region, cfg)) for key, region in regions_for(a)]

    store = FeatureStore()
    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        for a, feats in zip(annotations, pool.map(extract_one, annotations)):
            for key, fv in feats:
                store.add(a.image_id, key, fv)
    if part_model is not None:
        for a in annotations:
            for part in PERSON_PARTS:
                try:
                    fv = resolve_region_feature(store, a.image_id, part, "toy")
                except KeyError:
                    continue
                scores = embedded_scores(part_model, part, fv.values)
                store.add(
                    a.image_id,
                    part.label,
                    FeatureVector(scores, source="part-net", region=fv.region),
                )
    save_features(store, out / "features.paf")
    _write_manifest(out, "extract", resolved, inputs, ["features.paf"])


def _cmd_train_parts(resolved: dict) -> None:
    out = _out_dir(resolved)
    ann_path = _require(resolved.get("annotations"), "--annotations")
    annotations = _load_annotations_checked(ann_path)
    store, feat_inputs = _load_features_arg(resolved.get("features"))
    tag = resolved["source"]
    pairs = []
    skipped = 0
    for a in annotations:
        if a.part_actions is None:
            skipped += 1
            continue
        for part, label in sorted(a.part_actions.items()):
            try:
                fv = resolve_region_feature(store, a.image_id, part, tag)
            except KeyError:
                skipped += 1
                continue
            pairs.append((fv, label))
    if not pairs:
        raise CliError(CATEGORY_INPUT_INVALID,
                       "no (feature, part-action) training pairs found")
    cfg = PartActionTrainConfig(
        learning_rate=resolved["lr"],
        epochs=resolved["epochs"],
        l2=resolved["l2"],
        seed=resolved["seed"],
    )
    model = train_part_action(pairs, cfg)
    save_part_action_model(model, out / "part_model.bin")
    acc = part_action_accuracy(model, pairs)
    (out / "train_report.txt").write_text(
        f"pairs {len(pairs)}\nskipped {skipped}\ntrain_accuracy {acc!r}\n",
        encoding="utf-8",
    )
    _write_manifest(out, "train-parts", resolved,
                    {"annotations": ann_path, **feat_inputs},
                    ["part_model.bin", "train_report.txt"])


def _cmd_score_parts(resolved: dict) -> None:
    out = _out_dir(resolved)
    ann_path = _require(resolved.get("annotations"), "--annotations")
    annotations = _load_annotations_checked(ann_path)
    store, feat_inputs = _load_features_arg(resolved.get("features"))
    base = _fusion_config(resolved)
    scores = lda_part_scores(annotations, store, base)
    selected = select_parts(scores, resolved["m"])
    (out / "part_scores.txt").write_text(
        format_scores_report(scores, selected), encoding="utf-8"
    )
    _write_manifest(out, "score-parts", resolved,
                    {"annotations": ann_path, **feat_inputs},
                    ["part_scores.txt"])


def _cmd_train(resolved: dict) -> None:
    out = _out_dir(resolved)
    ann_path = _require(resolved.get("annotations"), "--annotations")
    annotations = _load_annotations_checked(ann_path)
    store, feat_inputs = _load_features_arg(resolved.get("features"))
    base = _fusion_config(resolved)
    if resolved["m"] > 0:
        scores = lda_part_scores(annotations, store, base)
        selected = tuple(select_parts(scores, resolved["m"]))
    else:
        scores = []
        selected = ()
    cfg = _fusion_config(resolved, selected)
    samples = assemble_dataset(annotations, store, cfg)
    model = train_ovr(samples, penalty=resolved["c"], seed=resolved["seed"])
    save_ovr_model(model, out / "model.bin", cfg)
    outputs = ["model.bin"]
    if scores:
        (out / "part_scores.txt").write_text(
            format_scores_report(scores, selected), encoding="utf-8"
        )
        outputs.append("part_scores.txt")
    _write_manifest(out, "train", resolved,
                    {"annotations": ann_path, **feat_inputs}, outputs)


def _cmd_eval(resolved: dict) -> None:
    out = _out_dir(resolved)
    ann_path = _require(resolved.get("annotations"), "--annotations")
    model_path = _require(resolved.get("model"), "--model")
    annotations = _load_annotations_checked(ann_path)
    store, feat_inputs = _load_features_arg(resolved.get("features"))
    model, cfg = load_ovr_model(model_path)
    if cfg is None:
        raise CliError(CATEGORY_FORMAT_ERROR,
                       "model file carries no fusion config echo")
    samples = assemble_dataset(annotations, store, cfg)
    report = evaluate_ovr(model, samples)
    (out / "report.txt").write_text(format_report_table([report]), encoding="utf-8")
    (out / "metrics.txt").write_text(format_report_metrics([report]), encoding="utf-8")
    save_scores_file(
        [(s.instance_id, predict_scores(model, s.vector)) for s in samples],
        model.classes,
        out / "scores.txt",
    )
    _write_manifest(out, "eval", resolved,
                    {"annotations": ann_path, "model": model_path, **feat_inputs},
                    ["report.txt", "metrics.txt", "scores.txt"])


def _cmd_ablate(resolved: dict) -> None:
    out = _out_dir(resolved)
    ann_path = _require(resolved.get("annotations"), "--annotations")
    annotations = _load_annotations_checked(ann_path)
    store, feat_inputs = _load_features_arg(resolved.get("features"))
    base = _fusion_config(resolved)
    rows = run_ablation(
        annotations,
        store,
        seed=resolved["seed"],
        penalty=resolved["c"],
        m=resolved["m"],
        part_weight=resolved["part_weight"],
        test_fraction=resolved["test_fraction"],
        base=base,
    )
    (out / "report.txt").write_text(format_report_table(rows), encoding="utf-8")
    (out / "metrics.txt").write_text(format_report_metrics(rows), encoding="utf-8")
    _write_manifest(out, "ablate", resolved,
                    {"annotations": ann_path, **feat_inputs},
                    ["report.txt", "metrics.txt"])


# ---------------------------------------------------------------------------
# Argument handling
# ---------------------------------------------------------------------------

_COMMON_DEFAULTS = {"seed": 0, "out": None, "config": None}

_DEFAULTS: dict[str, dict] = {
    "synth": {
        **_COMMON_DEFAULTS,
        "classes": 4, "per_class": 50, "body_dim": 8, "part_dim": 6,
        "snr": 5.0, "bbox_snr": 0.5, "grid_noise": 0.0,
    },
    "gridlab": {**_COMMON_DEFAULTS, "annotations": None, "compare": None,
                "grid_size": 16},
    "localize": {**_COMMON_DEFAULTS, "annotations": None, "grids": None,
                 "priors": None, "train_annotations": None},
    "extract": {**_COMMON_DEFAULTS, "annotations": None, "images": None,
                "boxes": None, "part_model": None, "intensity_bins": 8,
                "orientation_bins": 8, "pool": 2},
    "train-parts": {**_COMMON_DEFAULTS, "annotations": None, "features": None,
                    "source": "toy", "lr": 0.5, "epochs": 300, "l2": 1e-4},
    "score-parts": {**_COMMON_DEFAULTS, "annotations": None, "features": None,
                    "m": 2, "sources": "body-net,part-net,body-net"},
    "train": {**_COMMON_DEFAULTS, "annotations": None, "features": None,
              "m": 2, "part_weight": 0.5, "c": 1.0,
              "sources": "body-net,part-net,body-net"},
    "eval": {**_COMMON_DEFAULTS, "annotations": None, "features": None,
             "model": None},
    "ablate": {**_COMMON_DEFAULTS, "annotations": None, "features": None,
               "m": 2, "part_weight": 0.5, "c": 1.0, "test_fraction": 0.5,
               "sources": "body-net,part-net,body-net"},
}

_HANDLERS = {
    "synth": _cmd_synth,
    "gridlab": _cmd_gridlab,
    "localize": _cmd_localize,
    "extract": _cmd_extract,
    "train-parts": _cmd_train_parts,
    "score-parts": _cmd_score_parts,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "ablate": _cmd_ablate,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="partaction",
        description="Part-action body-action recognition pipeline",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name, help_text, *specs):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="random seed (default 0)")
        for spec in specs:
            p.add_argument(*spec[0], **spec[1])
        return p

    add("synth", "generate a synthetic dataset",
        (("--classes",), {"type": int}),
        (("--per-class",), {"type": int, "dest": "per_class"}),
        (("--body-dim",), {"type": int, "dest": "body_dim"}),
        (("--part-dim",), {"type": int, "dest": "part_dim"}),
        (("--snr",), {"type": float}),
        (("--bbox-snr",), {"type": float, "dest": "bbox_snr"}),
        (("--grid-noise",), {"type": float, "dest": "grid_noise"}))
    add("gridlab", "build coarse grids from masks or joints",
        (("--annotations",), {}),
        (("--compare",), {"help": "reference grids dir for pixel accuracy"}),
        (("--grid-size",), {"type": int, "dest": "grid_size"}))
    add("localize", "decode grids into part boxes with fallbacks",
        (("--annotations",), {}),
        (("--grids",), {}),
        (("--priors",), {}),
        (("--train-annotations",), {"dest": "train_annotations"}))
    add("extract", "extract toy features (and part-net scores) per region",
        (("--annotations",), {}),
        (("--images",), {}),
        (("--boxes",), {}),
        (("--part-model",), {"dest": "part_model"}),
        (("--intensity-bins",), {"type": int, "dest": "intensity_bins"}),
        (("--orientation-bins",), {"type": int, "dest": "orientation_bins"}),
        (("--pool",), {"type": int}))
    add("train-parts", "train the per-part action classifier",
        (("--annotations",), {}),
        (("--features",), {}),
        (("--source",), {}),
        (("--lr",), {"type": float}),
        (("--epochs",), {"type": int}),
        (("--l2",), {"type": float}))
    add("score-parts", "LDA-score part discriminativeness",
        (("--annotations",), {}),
        (("--features",), {}),
        (("--m",), {"type": int}),
        (("--sources",), {}))
    add("train", "select parts, fuse, and train the final classifier",
        (("--annotations",), {}),
        (("--features",), {}),
        (("--m",), {"type": int}),
        (("--part-weight",), {"type": float, "dest": "part_weight"}),
        (("--c",), {"type": float}),
        (("--sources",), {}))
    add("eval", "evaluate a trained model (per-class AP, mAP)",
        (("--annotations",), {}),
        (("--features",), {}),
        (("--model",), {}))
    add("ablate", "run the five-row feature-combination study",
        (("--annotations",), {}),
        (("--features",), {}),
        (("--m",), {"type": int}),
        (("--part-weight",), {"type": float, "dest": "part_weight"}),
        (("--c",), {"type": float}),
        (("--test-fraction",), {"type": float, "dest": "test_fraction"}),
        (("--sources",), {}))
    return parser


def _resolve(args: argparse.Namespace) -> dict:
    defaults = _DEFAULTS[args.subcommand]
    file_cfg = {}
    if args.config:
        cfg_path = Path(args.config)
        if not cfg_path.exists():
            raise CliError(CATEGORY_INPUT_MISSING, f"config file not found: {cfg_path}")
        try:
            file_cfg = json.loads(cfg_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise CliError(CATEGORY_CONFIG_INVALID, f"bad config JSON: {exc}")
        if not isinstance(file_cfg, dict):
            raise CliError(CATEGORY_CONFIG_INVALID, "config file must hold an object")
        unknown = set(file_cfg) - set(defaults)
        if unknown:
            raise CliError(
                CATEGORY_CONFIG_INVALID,
                f"unknown config keys for {args.subcommand}: {sorted(unknown)}",
            )
    resolved = {}
    for key, default in defaults.items():
        if key == "config":
            continue
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            resolved[key] = flag_val
        elif key in file_cfg:
            resolved[key] = file_cfg[key]
        else:
            resolved[key] = default
    return resolved


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        resolved = _resolve(args)
        _HANDLERS[args.subcommand](resolved)
    except CliError as exc:
        sys.stderr.write(f"error: {exc.category}: {exc}\n")
        return 1
    except FileNotFoundError as exc:
        sys.stderr.write(f"error: {CATEGORY_INPUT_MISSING}: {exc}\n")
        return 1
    except FeatureFileError as exc:
        sys.stderr.write(f"error: {CATEGORY_FORMAT_ERROR}: {exc}\n")
        return 1
    except ValueError as exc:
        sys.stderr.write(f"error: {CATEGORY_INPUT_INVALID}: {exc}\n")
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        sys.stderr.write(f"error: {CATEGORY_INTERNAL}: {exc}\n")
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
