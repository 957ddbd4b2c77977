"""export-embeddings: encode every claim version in a corpus file.

Exit codes: 0 success, 1 usage, 2 data error, 3 encoder/startup error.
"""

from __future__ import annotations

import argparse
import sys

from .encoders import EncoderSpec
from .errors import CorpusFormatError, EncodingError, StartupError
from .export import export_embeddings


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="export-embeddings", description=__doc__)
    parser.add_argument("--corpus", required=True, help="corpus JSONL of chain records")
    parser.add_argument("--model", required=True, help="hub model id or hash:<dim>")
    parser.add_argument("--out", required=True, help="output embedding TSV")
    parser.add_argument("--batch", type=int, default=64)
    parser.add_argument("--normalize", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    spec = EncoderSpec(model=args.model, batch_size=args.batch, normalize=args.normalize)
    try:
        stats = export_embeddings(args.corpus, spec, args.out)
    except (CorpusFormatError, FileNotFoundError) as exc:
        sys.stderr.write(f"data error: {exc}\n")
        return 2
    except (StartupError, EncodingError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 3
    print(f"wrote {stats.versions} vectors of dimension {stats.dim} to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
