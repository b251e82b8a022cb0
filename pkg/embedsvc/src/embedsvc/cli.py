"""Command line entry points: ``serve`` and ``export-fixtures``."""

from __future__ import annotations

import argparse
import sys


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embedsvc", description="Embedding and sentiment service"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)

    export = sub.add_parser(
        "export-fixtures", help="embed a corpus offline into a fixture JSONL"
    )
    export.add_argument("--corpus", required=True, help="corpus JSONL with a text field")
    export.add_argument("--out", required=True, help="fixture JSONL to write")

    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "serve":
        import uvicorn

        from .app import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return 0

    from .export import export_fixtures

    try:
        count = export_fixtures(args.corpus, args.out)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {count} fixture records to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
