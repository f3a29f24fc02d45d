"""Command line: embdump --data DIR --out FILE [--model ...] [--batch N]
[--device cpu] [--seed N]"""

import argparse
import sys

from .extract import ExtractJob, extract


def build_parser():
    parser = argparse.ArgumentParser(prog="embdump", description=__doc__)
    parser.add_argument("--data", required=True, help="image folder, one subfolder per class")
    parser.add_argument("--out", required=True, help="output AEPL file")
    parser.add_argument("--model", default="clip-vit-b32", help="clip-vit-b32 or patch-stats")
    parser.add_argument("--batch", type=int, default=32)
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    job = ExtractJob(
        data=args.data,
        out=args.out,
        model=args.model,
        batch=args.batch,
        device=args.device,
        seed=args.seed,
    )
    try:
        manifest = extract(job)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(
        f"wrote {args.out}: n={manifest['n']} d={manifest['d']} c={manifest['c']}"
        + (f" ({len(manifest['skipped'])} skipped)" if manifest["skipped"] else "")
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
