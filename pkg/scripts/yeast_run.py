"""Desk-scale run on the yeast cell-cycle matrix (2884 genes x 17 conditions).

The dataset is not bundled. Point ``--input`` (or BISWARM_YEAST_TSV) at a
tab-separated copy whose missing cells are marked ``-1``.

    python scripts/yeast_run.py --input yeast.tsv --out runs/yeast
"""

import argparse
import os
import sys

from biswarm import cli


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--input", default=os.environ.get("BISWARM_YEAST_TSV"))
    ap.add_argument("--out", default="runs/yeast")
    ap.add_argument("--pop-size", type=int, default=60)
    ap.add_argument("--max-gen", type=int, default=25)
    ap.add_argument("--prune-to", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if not args.input:
        ap.error("no dataset: pass --input or set BISWARM_YEAST_TSV")
    return cli.main([
        "run", "--input", args.input, "--delta", "300",
        "--pop-size", str(args.pop_size), "--max-gen", str(args.max_gen),
        "--prune-to", str(args.prune_to), "--seed", str(args.seed), "--out", args.out,
    ])


if __name__ == "__main__":
    sys.exit(main())
