"""Command-line entry point for the embedding exporter."""

from __future__ import annotations

import argparse
import sys

from embed_export.export import ExportError, ExportManifest, export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed-export",
        description="export frozen contextual character embeddings")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("export", help="corpus JSONL to LFEMB1 embeddings")
    p.add_argument("--corpus", required=True, help="corpus JSONL")
    p.add_argument("--model", required=True,
                   help="pretrained encoder name or directory")
    p.add_argument("--out", required=True, help="LFEMB1 output path")
    p.add_argument("--max-len", dest="max_len", type=int, default=512,
                   help="skip instances with more subword pieces than this")
    p.add_argument("--device", default="cpu")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    manifest = ExportManifest(corpus=args.corpus, model=args.model,
                              out=args.out, max_len=args.max_len,
                              device=args.device)
    try:
        written, skipped = export(manifest)
    except (ExportError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    line = f"wrote {written} records to {args.out}"
    if skipped:
        line += f", skipped {len(skipped)} (see {args.out}.skipped)"
    print(line, file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
