"""Recompute the report.txt summary row and coverage from biclusters.json alone.

Uses only the JSON gene/condition lists and residues, no package code, so it
serves as an independent check on what ``biswarm run`` printed.

    python scripts/recompute_summary.py OUT_DIR [--shape N M]
"""

import argparse
import json
import re
import sys
from pathlib import Path


def summary_from_records(records):
    sizes = [len(r["genes"]) * len(r["conditions"]) for r in records]
    k = len(records)
    return {
        "avg_size": round(sum(sizes) / k, 2),
        "avg_residue": round(sum(r["residue"] for r in records) / k, 2),
        "avg_genes": round(sum(len(r["genes"]) for r in records) / k, 2),
        "avg_conditions": round(sum(len(r["conditions"]) for r in records) / k, 2),
        "max_size": max(sizes),
    }


def coverage_from_records(records, n_genes, n_conditions):
    genes, conds, cells = set(), set(), set()
    for r in records:
        genes.update(r["genes"])
        conds.update(r["conditions"])
        cells.update((i, j) for i in r["genes"] for j in r["conditions"])
    return {
        "gene_pct": round(100.0 * len(genes) / n_genes, 2),
        "cond_pct": round(100.0 * len(conds) / n_conditions, 2),
        "cell_pct": round(100.0 * len(cells) / (n_genes * n_conditions), 2),
    }


def summary_from_text(text):
    """Pull the five numbers printed under the 'Summary' heading."""
    lines = text.splitlines()
    k = lines.index("Summary")
    values = lines[k + 3].split()
    keys = ["avg_size", "avg_residue", "avg_genes", "avg_conditions", "max_size"]
    out = {key: float(v) for key, v in zip(keys, values)}
    out["max_size"] = int(values[-1])
    return out


def coverage_from_text(text):
    m = re.search(r"cover ([\d.]+)% of the genes, ([\d.]+)% of the conditions and ([\d.]+)% cells", text)
    return dict(zip(["gene_pct", "cond_pct", "cell_pct"], map(float, m.groups())))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out_dir", type=Path)
    ap.add_argument("--shape", type=int, nargs=2, metavar=("N", "M"),
                    help="matrix dimensions, to also check coverage")
    args = ap.parse_args(argv)
    records = json.loads((args.out_dir / "biclusters.json").read_text())
    text = (args.out_dir / "report.txt").read_text()
    ok = True
    want, got = summary_from_records(records), summary_from_text(text)
    print("summary recomputed:", want)
    print("summary printed:   ", got)
    ok &= want == got
    if args.shape:
        want, got = coverage_from_records(records, *args.shape), coverage_from_text(text)
        print("coverage recomputed:", want)
        print("coverage printed:   ", got)
        ok &= want == got
    print("MATCH" if ok else "MISMATCH")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
