"""Command-line front end: featexport --annotations ... --out features.paf"""
from __future__ import annotations

import argparse
import sys

from .export import ExportJob, run_export
from .models import MODEL_REGISTRY


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="featexport",
        description="Export region embeddings from annotated images as a PAF1 file",
    )
    parser.add_argument("--annotations", required=True, help="JSON-lines annotation file")
    parser.add_argument("--image-root", required=True, help="directory of <image_id>.npy images")
    parser.add_argument("--model", default="tiny-conv-16",
                        help=f"model identifier ({', '.join(sorted(MODEL_REGISTRY))})")
    parser.add_argument("--tag", default="body-net",
                        help="source tag to stamp (body-net or part-net)")
    parser.add_argument("--out", default="features.paf", help="output feature file")
    args = parser.parse_args(argv)
    try:
        job = ExportJob(
            annotations=args.annotations,
            image_root=args.image_root,
            model=args.model,
            tag=args.tag,
            output=args.out,
        )
        summary = run_export(job)
    except FileNotFoundError as exc:
        sys.stderr.write(f"error: input-missing: {exc}\n")
        return 1
    except ValueError as exc:
        sys.stderr.write(f"error: input-invalid: {exc}\n")
        return 1
    print(
        f"exported {summary.records} features from {summary.instances} instances "
        f"to {summary.output} (skipped images {summary.skipped_images}, "
        f"regions {summary.skipped_regions})"
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
