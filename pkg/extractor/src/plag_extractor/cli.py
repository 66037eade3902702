"""Command-line entry point for the image-folder feature extractor."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from plag_extractor.extract import ExtractionError, ExtractionJob, extract


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plagiart-extract",
        description="Embed image folders into a plagiart manifest + blob pair",
    )
    parser.add_argument("--vg-dir", help="folder of authentic van_gogh images")
    parser.add_argument("--other-dir", help="folder of other artists' images")
    parser.add_argument("--plag-dir", help="folder of plagiarized images")
    parser.add_argument("--splits", default="0.6,0.2,0.2",
                        help="train,val,test ratios or a JSON file mapping "
                             "filename to split")
    parser.add_argument("--model", default="facebook/dinov2-small",
                        help="model identifier or local checkpoint path")
    parser.add_argument("--feature", choices=["class_token", "mean_pool"],
                        default="class_token")
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--out-manifest", required=True)
    parser.add_argument("--out-blob", required=True)
    parser.add_argument("--strict", action="store_true",
                        help="fail on undecodable images instead of skipping")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    label_dirs = {}
    for label, flag in (("van_gogh", args.vg_dir), ("other", args.other_dir),
                        ("plagiarized", args.plag_dir)):
        if flag:
            label_dirs[label] = Path(flag)
    splits_file = None
    ratios = None
    if Path(args.splits).is_file():
        splits_file = Path(args.splits)
    else:
        try:
            parts = tuple(float(x) for x in args.splits.split(","))
        except ValueError:
            print(f"error: --splits is neither a file nor a ratio triple: "
                  f"{args.splits!r}", file=sys.stderr)
            return 2
        ratios = parts

    job = ExtractionJob(
        label_dirs=label_dirs,
        out_manifest=Path(args.out_manifest),
        out_blob=Path(args.out_blob),
        model=args.model,
        split_ratios=ratios,
        splits_file=splits_file,
        feature=args.feature,
        batch_size=args.batch_size,
        strict=args.strict,
    )
    try:
        embedded, skipped = extract(job)
    except ExtractionError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"embedded {embedded} images ({skipped} skipped) -> "
          f"{args.out_manifest}, {args.out_blob}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
