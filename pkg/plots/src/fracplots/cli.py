"""Command line entry: plots <kind> <artifact-dir> <out.png>."""

import argparse
import sys

from .render import KINDS, FigureRequest, MissingArtifact, ParseError, render


def main(argv=None):
    ap = argparse.ArgumentParser(prog="plots", description=__doc__)
    ap.add_argument("kind", choices=KINDS)
    ap.add_argument("artifact_dir")
    ap.add_argument("out_path")
    ns = ap.parse_args(argv)
    try:
        out = render(FigureRequest(ns.artifact_dir, ns.kind, ns.out_path))
    except (MissingArtifact, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
