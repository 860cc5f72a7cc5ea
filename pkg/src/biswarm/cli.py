"""Command-line entry point: ``run``, ``refine`` and ``profile-export``.

Exit statuses: 0 success, 2 bad input (parse, dimension, index or argument
errors), 3 no feasible bicluster for the given delta, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from biswarm.bicluster import (
    Bicluster,
    Coverage,
    bicluster_from_json,
    bicluster_to_json,
    coverage,
)
from biswarm.expr import ExpressionMatrix, MatrixError, compute_stats, load_matrix
from biswarm.local_search import LocalSearchConfig, Phases, local_search
from biswarm.mopso import InfeasibleError, PsoParams, run
from biswarm.pareto import ParetoArchive

log = logging.getLogger("biswarm")

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_IO = 0, 2, 3, 4


class CliError(Exception):
    def __init__(self, message: str, status: int):
        super().__init__(message)
        self.status = status


def fnv1a64(data: bytes) -> str:
    h = 0xCBF29CE484222325
    for byte in data:
        h ^= byte
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return f"{h:016x}"


def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment, hyphens equal underscores."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for k, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise CliError(f"{path}:{k}: expected key=value", EXIT_INPUT)
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


# ---------------------------------------------------------------------------
# artifacts


def archive_records(matrix: ExpressionMatrix, archive: ParetoArchive) -> list[dict]:
    records = []
    for k, e in enumerate(archive.entries, start=1):
        rec = {"id": k, **bicluster_to_json(matrix, e.bicluster)}
        rec["objectives"] = {
            "f1": e.objectives.f1,
            "f2": e.objectives.f2,
            "f3": e.objectives.f3,
            "f4": e.objectives.f4,
        }
        records.append(rec)
    return records


def bicluster_table(records: list[dict]) -> list[dict]:
    return [
        {
            "id": r["id"],
            "n_genes": len(r["genes"]),
            "n_conditions": len(r["conditions"]),
            "residue": r["residue"],
            "row_variance": r["row_variance"],
            "volume": r["volume"],
        }
        for r in records
    ]


def summarize(table: list[dict]) -> dict:
    if not table:
        return {k: 0.0 for k in ("avg_size", "avg_residue", "avg_genes", "avg_conditions", "max_size")}
    sizes = [r["n_genes"] * r["n_conditions"] for r in table]
    return {
        "avg_size": float(np.mean(sizes)),
        "avg_residue": float(np.mean([r["residue"] for r in table])),
        "avg_genes": float(np.mean([r["n_genes"] for r in table])),
        "avg_conditions": float(np.mean([r["n_conditions"] for r in table])),
        "max_size": int(max(sizes)),
    }


def render_text(table: list[dict], summary: dict, cov: Coverage, delta: float) -> str:
    lines = [f"Biclusters (delta = {delta:g})", ""]
    lines.append(f"{'Bicluster':>9}  {'Genes':>6}  {'Conditions':>10}  {'Residue':>10}  {'Row variance':>12}")
    for r in table:
        lines.append(
            f"{r['id']:>9}  {r['n_genes']:>6}  {r['n_conditions']:>10}  "
            f"{r['residue']:>10.2f}  {r['row_variance']:>12.2f}"
        )
    lines += ["", "Summary", ""]
    lines.append(f"{'Avg size':>10}  {'Avg residue':>11}  {'Avg genes':>9}  {'Avg condition':>13}  {'Max size':>8}")
    lines.append(
        f"{summary['avg_size']:>10.2f}  {summary['avg_residue']:>11.2f}  "
        f"{summary['avg_genes']:>9.2f}  {summary['avg_conditions']:>13.2f}  {summary['max_size']:>8}"
    )
    lines += ["", f"These biclusters cover {cov.phrase()}.", ""]
    return "\n".join(lines)


def _dump(obj) -> str:
    return json.dumps(obj, indent=1) + "\n"


def publish(staging: Path, out_dir: Path) -> None:
    """Move every file from ``staging`` into ``out_dir`` by rename."""
    out_dir.mkdir(parents=True, exist_ok=True)
    for src in sorted(staging.rglob("*")):
        if src.is_file():
            dst = out_dir / src.relative_to(staging)
            dst.parent.mkdir(parents=True, exist_ok=True)
            os.replace(src, dst)


def _read_bytes(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}", EXIT_IO) from None


def _load(path, missing_marker: str) -> tuple[ExpressionMatrix, bytes]:
    raw = _read_bytes(path)
    try:
        return load_matrix(raw, missing_marker), raw
    except MatrixError as exc:
        raise CliError(f"{path}: {exc}", EXIT_INPUT) from None


def _read_json(path):
    raw = _read_bytes(path)
    try:
        return json.loads(raw)
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: invalid JSON ({exc})", EXIT_INPUT) from None


def _workers() -> int:
    raw = os.environ.get("BISWARM_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise CliError(f"BISWARM_THREADS must be an integer, got {raw!r}", EXIT_INPUT) from None
    return n if n > 0 else (os.cpu_count() or 1)


# ---------------------------------------------------------------------------
# commands

_PARAM_FLAGS = {
    "seed": int,
    "pop_size": int,
    "max_gen": int,
    "alpha": float,
    "prune_to": int,
    "archive_cap": int,
    "w": float,
    "c1": float,
    "c2": float,
    "v_max": float,
    "mutation_prob": float,
    "init_gene_prob": float,
    "init_cond_prob": float,
    "ls_max_iterations": int,
    "epsilon_var": float,
}


def _flag(text: str) -> bool:
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(text)



def cmd_run(args) -> int:
    if args.input is None or args.delta is None or args.out is None:
        raise CliError("run needs --input, --delta and --out", EXIT_INPUT)
    matrix, raw = _load(args.input, args.missing_marker)
    names = [*_PARAM_FLAGS, "reject_flat"]
    overrides = {k: getattr(args, k) for k in names if getattr(args, k) is not None}
    try:
        params = PsoParams(delta=args.delta, **overrides)
    except ValueError as exc:
        raise CliError(f"invalid parameters: {exc}", EXIT_INPUT) from None
    if args.snapshot_every < 0:
        raise CliError("--snapshot-every must be non-negative", EXIT_INPUT)

    snapshots: dict[int, list[dict]] = {}

    def hook(gen, particles, archive):
        if args.snapshot_every and gen >= 0 and (gen + 1) % args.snapshot_every == 0:
            snapshots[gen + 1] = archive_records(matrix, archive)

    log.info("running on %dx%d matrix, delta=%g, seed=%d", *matrix.shape, params.delta, params.seed)
    try:
        archive, trace = run(matrix, params, hook=hook, workers=_workers())
    except InfeasibleError as exc:
        raise CliError(str(exc), EXIT_INFEASIBLE) from None

    records = archive_records(matrix, archive)
    table = bicluster_table(records)
    summary = summarize(table)
    cov = coverage(matrix, archive.biclusters())
    report = trace.to_dict()
    report.update(
        bicluster_table=table,
        summary=summary,
        coverage=dataclasses.asdict(cov),
        provenance={
            "seed": params.seed,
            "params": dataclasses.asdict(params),
            "dataset_checksum": fnv1a64(raw),
            "input": str(args.input),
            "wall_seconds": trace.total_seconds,
        },
    )

    out_dir = Path(args.out)
    try:
        out_dir.parent.mkdir(parents=True, exist_ok=True)
        with tempfile.TemporaryDirectory(dir=out_dir.parent, prefix=".biswarm-") as tmp:
            staging = Path(tmp)
            (staging / "biclusters.json").write_text(_dump(records))
            (staging / "report.json").write_text(_dump(report))
            (staging / "report.txt").write_text(render_text(table, summary, cov, params.delta))
            for gen, snap in snapshots.items():
                (staging / "snapshots").mkdir(exist_ok=True)
                (staging / "snapshots" / f"gen_{gen:04d}.json").write_text(_dump(snap))
            publish(staging, out_dir)
    except OSError as exc:
        raise CliError(f"cannot write results to {out_dir}: {exc}", EXIT_IO) from None

    print(f"{len(records)} biclusters written to {out_dir}")
    print(f"These biclusters cover {cov.phrase()}.")
    return EXIT_OK


def _describe(matrix: ExpressionMatrix, bc: Bicluster) -> str:
    st = compute_stats(matrix, bc)
    return (
        f"{bc.n_genes} genes x {bc.n_conditions} conditions, "
        f"residue {st.residue:.4f}, row variance {st.row_variance:.4f}"
    )


def cmd_refine(args) -> int:
    if args.input is None or args.delta is None or args.bicluster is None or args.out is None:
        raise CliError("refine needs --input, --delta, --bicluster and --out", EXIT_INPUT)
    matrix, _ = _load(args.input, args.missing_marker)
    obj = _read_json(args.bicluster)
    try:
        bc = bicluster_from_json(matrix, obj)
        config = LocalSearchConfig(args.delta, args.alpha, phases=Phases.FULL)
        compute_stats(matrix, bc)
    except (MatrixError, IndexError, ValueError, AttributeError, TypeError) as exc:
        raise CliError(f"{args.bicluster}: {exc}", EXIT_INPUT) from None
    refined = local_search(matrix, bc, config)
    print(f"input:  {_describe(matrix, bc)}")
    print(f"output: {_describe(matrix, refined)}")

    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        tmp = out_dir / ".refined.json.tmp"
        tmp.write_text(_dump(bicluster_to_json(matrix, refined)))
        os.replace(tmp, out_dir / "refined.json")
    except OSError as exc:
        raise CliError(f"cannot write to {out_dir}: {exc}", EXIT_IO) from None
    return EXIT_OK


def sample_profile_rows(genes: list[int], sample_n: int, seed: int) -> list[int]:
    """Uniform sample without replacement, kept in ascending gene order."""
    if sample_n >= len(genes):
        return list(genes)
    rng = np.random.default_rng(seed)
    picked = rng.choice(len(genes), size=sample_n, replace=False)
    return [genes[k] for k in sorted(picked)]


def cmd_profile_export(args) -> int:
    if None in (args.input, args.biclusters, args.id, args.out):
        raise CliError("profile-export needs --input, --biclusters, --id and --out", EXIT_INPUT)
    if args.sample < 1:
        raise CliError("--sample must be positive", EXIT_INPUT)
    matrix, _ = _load(args.input, args.missing_marker)
    records = _read_json(args.biclusters)
    match = [r for r in records if isinstance(r, dict) and r.get("id") == args.id]
    if not match:
        raise CliError(f"no bicluster with id {args.id} in {args.biclusters}", EXIT_INPUT)
    rec = match[0]
    try:
        bc = bicluster_from_json(matrix, rec)
    except (MatrixError, IndexError) as exc:
        raise CliError(f"bicluster {args.id}: {exc}", EXIT_INPUT) from None

    rows = sample_profile_rows([int(i) for i in bc.genes], args.sample, args.seed)
    conds = [int(j) for j in bc.conditions]
    lines = ["\t".join(["gene"] + [matrix.condition_labels[j] for j in conds])]
    for i in rows:
        cells = [
            repr(float(matrix.values[i, j])) if matrix.present[i, j] else args.missing_marker
            for j in conds
        ]
        lines.append("\t".join([matrix.gene_labels[i]] + cells))
    out = Path(args.out)
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        tmp = out.with_name(out.name + ".tmp")
        tmp.write_text("\n".join(lines) + "\n")
        os.replace(tmp, out)
    except OSError as exc:
        raise CliError(f"cannot write {out}: {exc}", EXIT_IO) from None
    print(f"{len(rows)} genes x {len(conds)} conditions written to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="biswarm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--input", type=Path, help="tab-separated expression matrix")
        p.add_argument("--missing-marker", default="-1", help="cell text meaning 'missing'")
        p.add_argument("--config", type=Path, help="key=value file; flags override it")

    p = sub.add_parser("run", help="mine biclusters with the hybrid swarm")
    common(p)
    p.add_argument("--delta", type=float, help="maximum mean squared residue")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--snapshot-every", type=int, default=0, metavar="G",
                   help="also write the archive every G generations (0 = final only)")
    for name, typ in _PARAM_FLAGS.items():
        p.add_argument("--" + name.replace("_", "-"), type=typ, default=None)
    p.add_argument("--reject-flat", type=_flag, default=None, metavar="BOOL",
                   help="keep zero-row-variance biclusters out of the archive (default true)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("refine", help="apply the three-phase local search to one bicluster")
    common(p)
    p.add_argument("--delta", type=float)
    p.add_argument("--alpha", type=float, default=1.2)
    p.add_argument("--bicluster", type=Path, help="JSON with 'genes' and 'conditions'")
    p.add_argument("--out", type=Path, help="output directory")
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("profile-export", help="write sampled expression profiles of a bicluster")
    common(p)
    p.add_argument("--biclusters", type=Path, help="biclusters.json from a run")
    p.add_argument("--id", type=int)
    p.add_argument("--sample", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, help="output TSV path")
    p.set_defaults(func=cmd_profile_export)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if getattr(args, "config", None) is None:
        return args
    try:
        values = read_config(args.config)
    except OSError as exc:
        raise CliError(f"cannot read config {args.config}: {exc.strerror or exc}", EXIT_IO) from None
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, raw in values.items():
        action = known.get(key)
        if action is None or key in ("config", "help", "func"):
            raise CliError(f"{args.config}: unknown key {key!r}", EXIT_INPUT)
        try:
            defaults[key] = action.type(raw) if action.type else raw
        except (TypeError, ValueError):
            raise CliError(f"{args.config}: bad value for {key!r}: {raw!r}", EXIT_INPUT) from None
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = _apply_config(parser, argv)
        logging.basicConfig(
            level=logging.WARNING - 10 * min(args.verbose, 2),
            format="%(levelname)s %(name)s: %(message)s",
        )
        return args.func(args)
    except CliError as exc:
        print(f"biswarm: error: {exc}", file=sys.stderr)
        return exc.status


if __name__ == "__main__":
    sys.exit(main())
