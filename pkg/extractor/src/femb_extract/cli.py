"""`femb-extract`: audio manifest in, FEMB embedding file out."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ExtractError
from .extract import extract
from .spec import ExtractorSpec, MODEL_HUB_IDS, read_audio_manifest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="femb-extract",
        description="Extract pooled embeddings from audio into FEMB files",
    )
    parser.add_argument("--model", required=True,
                        choices=sorted(MODEL_HUB_IDS),
                        help="foundation model id, or 'mfcc' for the baseline")
    parser.add_argument("--manifest", required=True,
                        help="JSONL audio manifest: {id, path, label} per line")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--jobs", type=int, default=1,
                        help="parallel decode/extract workers")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        entries = read_audio_manifest(args.manifest)
        spec = ExtractorSpec(model=args.model, entries=entries)
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        summary = extract(spec, outdir / f"{spec.model}.femb", jobs=args.jobs)
    except ExtractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {summary['rows']} rows ({summary['rejects']} rejected) "
          f"to {summary['out']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
