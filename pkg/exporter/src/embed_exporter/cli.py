"""Command-line front end: one export run per invocation."""

from __future__ import annotations

import argparse
import sys

from .export import ExportError, export
from .requests import ExportRequest, RequestError, load_request_items


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed-export",
        description="Export verb-in-context vectors from a pretrained encoder "
                    "into the affect toolkit's binary feature format.")
    parser.add_argument("--requests", required=True,
                        help="JSON-lines file of keyed sentences")
    parser.add_argument("--encoder", required=True,
                        help="model name or local checkpoint directory")
    parser.add_argument("--out", required=True, help="feature file to write")
    parser.add_argument("--layer", type=int, default=-1,
                        help="hidden state index, -1 = last (default)")
    parser.add_argument("--batch-size", type=int, default=8)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        items = load_request_items(args.requests)
        request = ExportRequest(items=items, encoder=args.encoder,
                                layer=args.layer, batch_size=args.batch_size)
    except RequestError as exc:
        for problem in exc.problems:
            print(f"embed-export: request error: {problem}", file=sys.stderr)
        return 2
    try:
        result = export(request, args.out)
    except ExportError as exc:
        print(f"embed-export: error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(result.written)} vectors (dim {result.dim}) to "
          f"{result.path}; skipped {len(result.skipped)}")
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
