"""archlens-adapter: convert upstream pipeline output and embed characters.

    archlens-adapter extract --upstream DIR --characters OUT.jsonl --occurrences OUT.jsonl
    archlens-adapter embed --occurrences IN.jsonl --encoder ID --out OUT.cemb
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .encode import DEFAULT_EXCLUDE, embed_to_file
from .upstream import extract_corpus, read_occurrences


def cmd_extract(args) -> int:
    if not Path(args.upstream).is_dir():
        print(f"archlens-adapter: error: no such directory: {args.upstream}", file=sys.stderr)
        return 2
    with open(args.characters, "w", encoding="utf-8") as chars_fh, \
            open(args.occurrences, "w", encoding="utf-8") as occ_fh:
        n_records, n_occurrences = extract_corpus(Path(args.upstream), chars_fh, occ_fh)
    print(f"wrote {n_records} character records, {n_occurrences} occurrences")
    return 0


def cmd_embed(args) -> int:
    occurrences = read_occurrences(args.occurrences)
    exclude = [] if args.include_all else (args.exclude or list(DEFAULT_EXCLUDE))
    report = embed_to_file(
        occurrences,
        encoder_id=args.encoder,
        out_path=args.out,
        exclude=exclude,
        batch_size=args.batch_size,
        report_path=args.report,
    )
    print(
        f"embedded {report.characters_written} characters (dim={report.dim}); "
        f"dropped {len(report.dropped_characters)}, "
        f"skipped {report.skipped_occurrences} occurrences"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="archlens-adapter", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="upstream tables -> characters + occurrences files")
    p.add_argument("--upstream", type=Path, required=True)
    p.add_argument("--characters", type=Path, required=True)
    p.add_argument("--occurrences", type=Path, required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("embed", help="occurrences + encoder -> CEMB embeddings file")
    p.add_argument("--occurrences", type=Path, required=True)
    p.add_argument("--encoder", required=True, help="model id or local path")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--report", type=Path, help="sidecar report of dropped characters")
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--exclude", action="append",
                   help="attribute category to exclude (default: patient_verbs)")
    p.add_argument("--include-all", action="store_true", help="pool every category")
    p.set_defaults(func=cmd_embed)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError) as exc:
        print(f"archlens-adapter: error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    sys.exit(main())


if __name__ == "__main__":
    entry()
