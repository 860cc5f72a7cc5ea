"""Write a synthetic matrix with one planted additive bicluster to a TSV.

    python scripts/make_planted.py planted.tsv --seed 0 [--truth truth.json]
"""

import argparse
import json

from biswarm.expr import write_matrix
from biswarm.synthetic import planted_block


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--genes", type=int, default=60)
    ap.add_argument("--conditions", type=int, default=12)
    ap.add_argument("--block", type=int, nargs=2, default=(20, 6), metavar=("G", "C"))
    ap.add_argument("--block-noise", type=float, default=0.0)
    ap.add_argument("--truth", help="also write the planted gene/condition indices as JSON")
    args = ap.parse_args(argv)
    pb = planted_block(
        n_genes=args.genes,
        n_conditions=args.conditions,
        block_genes=args.block[0],
        block_conditions=args.block[1],
        block_noise=args.block_noise,
        seed=args.seed,
    )
    write_matrix(pb.matrix, args.out)
    if args.truth:
        with open(args.truth, "w") as fh:
            json.dump({"genes": pb.truth.genes.tolist(), "conditions": pb.truth.conditions.tolist()}, fh)
    print(f"wrote {args.out} ({args.genes}x{args.conditions}), suggested delta {pb.delta:g}")


if __name__ == "__main__":
    main()
