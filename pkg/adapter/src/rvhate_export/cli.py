"""Command-line exporter: JSONL dataset -> RVHE embedding file."""

from __future__ import annotations

import argparse
import sys

from .export import ExportError, ExportJob, export_embeddings


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rvhate-export",
        description="encode a JSONL dataset with a sentence encoder and write an RVHE file",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("export", help="encode a dataset")
    p.add_argument("--data", required=True, help="JSONL dataset path")
    p.add_argument(
        "--encoder",
        required=True,
        help="encoder id: 'hash:<dim>' (offline) or a sentence-transformers model name",
    )
    p.add_argument("--out", required=True, help="output .rvhe path")
    p.add_argument("--batch", type=int, default=64, help="encoding batch size")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    job = ExportJob(dataset=args.data, encoder=args.encoder, out=args.out, batch_size=args.batch)
    try:
        count, dim = export_embeddings(job)
    except ExportError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except Exception as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    print(f"wrote {count} rows of dim {dim} to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
