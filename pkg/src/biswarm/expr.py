"""Expression matrices and submatrix statistics (mean squared residue, row variance).

Missing cells are carried in a boolean ``present`` mask. Every mean uses the
count of present cells as its denominator, and absent cells add nothing to
residue or variance sums.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import TYPE_CHECKING, BinaryIO

import numpy as np

if TYPE_CHECKING:
    from biswarm.bicluster import Bicluster


class MatrixError(ValueError):
    """Base class for problems with an expression matrix or a selection on it."""


class MatrixFormatError(MatrixError):
    pass


class MatrixParseError(MatrixError):
    pass


class DimensionError(MatrixError):
    pass


class EmptySelectionError(MatrixError):
    pass


class DegenerateSubmatrixError(MatrixError):
    pass


@dataclass(frozen=True, eq=False)
class ExpressionMatrix:
    values: np.ndarray
    present: np.ndarray
    gene_labels: tuple[str, ...]
    condition_labels: tuple[str, ...]

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        present = np.array(self.present, dtype=bool)
        if values.ndim != 2 or values.shape != present.shape:
            raise DimensionError(
                f"values {values.shape} and present {present.shape} must be equal 2-D shapes"
            )
        n, m = values.shape
        if n < 2 or m < 2:
            raise DimensionError(f"need at least 2 genes and 2 conditions, got {n}x{m}")
        if len(self.gene_labels) != n or len(self.condition_labels) != m:
            raise DimensionError("label counts do not match matrix dimensions")
        values = np.where(present, values, np.nan)
        values.setflags(write=False)
        present.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "present", present)
        object.__setattr__(self, "gene_labels", tuple(self.gene_labels))
        object.__setattr__(self, "condition_labels", tuple(self.condition_labels))

    @classmethod
    def from_array(cls, values, present=None) -> "ExpressionMatrix":
        values = np.asarray(values, dtype=np.float64)
        if present is None:
            present = ~np.isnan(values)
        n, m = values.shape
        return cls(
            values,
            present,
            tuple(f"g{i}" for i in range(n)),
            tuple(f"c{j}" for j in range(m)),
        )

    @property
    def n_genes(self) -> int:
        return self.values.shape[0]

    @property
    def n_conditions(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def load_matrix(source: BinaryIO | bytes, missing_marker: str = "-1") -> ExpressionMatrix:
    """Parse a tab-separated expression table.

    The first row holds condition labels (with or without a leading corner
    cell), the first column holds gene labels. Cells equal to
    ``missing_marker`` are recorded as absent.
    """
    raw = source if isinstance(source, bytes) else source.read()
    text = io.StringIO(raw.decode("utf-8-sig"))
    lines = [(k, ln.rstrip("\r\n")) for k, ln in enumerate(text, start=1)]
    lines = [(k, ln) for k, ln in lines if ln.strip()]
    if not lines:
        raise DimensionError("empty input")

    header_no, header_line = lines[0]
    header = header_line.split("\t")
    body = [(k, ln.split("\t")) for k, ln in lines[1:]]
    if not body:
        raise DimensionError("no data rows")

    width = len(body[0][1])
    for k, fields in body:
        if len(fields) != width:
            raise MatrixFormatError(
                f"line {k}: expected {width} fields, found {len(fields)}"
            )
    if len(header) == width:
        cond_labels = header[1:]
    elif len(header) == width - 1:
        cond_labels = header
    else:
        raise MatrixFormatError(
            f"line {header_no}: header has {len(header)} fields, data rows have {width}"
        )

    n, m = len(body), width - 1
    if n < 2 or m < 2:
        raise DimensionError(f"need at least 2 genes and 2 conditions, got {n}x{m}")

    values = np.zeros((n, m))
    present = np.ones((n, m), dtype=bool)
    genes = []
    for i, (k, fields) in enumerate(body):
        genes.append(fields[0])
        for j, cell in enumerate(fields[1:]):
            cell = cell.strip()
            if cell == missing_marker:
                present[i, j] = False
                continue
            try:
                values[i, j] = float(cell)
            except ValueError:
                raise MatrixParseError(
                    f"line {k}, column {j + 2}: cannot parse {cell!r} as a number"
                ) from None
    return ExpressionMatrix(values, present, tuple(genes), tuple(cond_labels))


def load_matrix_path(path, missing_marker: str = "-1") -> ExpressionMatrix:
    with open(path, "rb") as fh:
        return load_matrix(fh, missing_marker)


@dataclass(frozen=True, eq=False)
class SubmatrixStats:
    genes: np.ndarray
    conditions: np.ndarray
    row_means: np.ndarray
    col_means: np.ndarray
    grand_mean: float
    residue: float
    row_variance: float
    volume: int


def _selection(matrix: ExpressionMatrix, bicluster: "Bicluster"):
    if bicluster.gene_mask.shape != (matrix.n_genes,) or bicluster.cond_mask.shape != (
        matrix.n_conditions,
    ):
        raise DimensionError("bicluster masks do not match matrix dimensions")
    genes = np.flatnonzero(bicluster.gene_mask)
    conds = np.flatnonzero(bicluster.cond_mask)
    if genes.size == 0 or conds.size == 0:
        raise EmptySelectionError("bicluster selects no genes or no conditions")
    return genes, conds


def _masked_means(x: np.ndarray, p: np.ndarray, axis: int) -> np.ndarray:
    cnt = p.sum(axis=axis)
    total = np.where(p, x, 0.0).sum(axis=axis)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(cnt > 0, total / np.maximum(cnt, 1), np.nan)


def compute_stats(matrix: ExpressionMatrix, bicluster: "Bicluster") -> SubmatrixStats:
    genes, conds = _selection(matrix, bicluster)
    idx = np.ix_(genes, conds)
    p = matrix.present[idx]
    volume = int(p.sum())
    if volume == 0:
        raise DegenerateSubmatrixError("submatrix has no present cells")
    x = np.where(p, matrix.values[idx], 0.0)

    row_means = _masked_means(x, p, axis=1)
    col_means = _masked_means(x, p, axis=0)
    grand = float(x.sum() / volume)

    # rows/columns with no present cells have NaN means; their cells are all absent
    resid = x - row_means[:, None] - col_means[None, :] + grand
    resid = np.where(p, resid, 0.0)
    dev = np.where(p, x - row_means[:, None], 0.0)
    return SubmatrixStats(
        genes=genes,
        conditions=conds,
        row_means=row_means,
        col_means=col_means,
        grand_mean=grand,
        residue=float((resid**2).sum() / volume),
        row_variance=float((dev**2).sum() / volume),
        volume=volume,
    )


def row_contributions(
    matrix: ExpressionMatrix, bicluster: "Bicluster", stats: SubmatrixStats | None = None
) -> np.ndarray:
    """Mean squared residue of every gene (member or not) against the bicluster.

    A gene's own mean over the selected conditions is combined with the
    bicluster's column means and grand mean. Genes with no usable cell get
    ``inf``.
    """
    if stats is None:
        stats = compute_stats(matrix, bicluster)
    conds = stats.conditions
    x = matrix.values[:, conds]
    p = matrix.present[:, conds] & np.isfinite(stats.col_means)[None, :]
    own = _masked_means(x, p, axis=1)
    resid = x - own[:, None] - stats.col_means[None, :] + stats.grand_mean
    sq = np.where(p, resid, 0.0) ** 2
    cnt = p.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(cnt > 0, sq.sum(axis=1) / np.maximum(cnt, 1), np.inf)


def col_contributions(
    matrix: ExpressionMatrix, bicluster: "Bicluster", stats: SubmatrixStats | None = None
) -> np.ndarray:
    """Column counterpart of :func:`row_contributions`."""
    if stats is None:
        stats = compute_stats(matrix, bicluster)
    genes = stats.genes
    x = matrix.values[genes, :]
    p = matrix.present[genes, :] & np.isfinite(stats.row_means)[:, None]
    own = _masked_means(x, p, axis=0)
    resid = x - stats.row_means[:, None] - own[None, :] + stats.grand_mean
    sq = np.where(p, resid, 0.0) ** 2
    cnt = p.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(cnt > 0, sq.sum(axis=0) / np.maximum(cnt, 1), np.inf)


def residue_contribution_row(matrix: ExpressionMatrix, bicluster: "Bicluster", gene: int) -> float:
    if not 0 <= gene < matrix.n_genes:
        raise IndexError(f"gene index {gene} out of range")
    return float(row_contributions(matrix, bicluster)[gene])


def residue_contribution_col(
    matrix: ExpressionMatrix, bicluster: "Bicluster", condition: int
) -> float:
    if not 0 <= condition < matrix.n_conditions:
        raise IndexError(f"condition index {condition} out of range")
    return float(col_contributions(matrix, bicluster)[condition])


def write_matrix(matrix: ExpressionMatrix, path, missing_marker: str = "-1") -> None:
    """Write ``matrix`` in the layout :func:`load_matrix` reads (with a corner cell)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(["gene", *matrix.condition_labels]) + "\n")
        for i, label in enumerate(matrix.gene_labels):
            cells = [
                repr(float(v)) if ok else missing_marker
                for v, ok in zip(matrix.values[i], matrix.present[i])
            ]
            fh.write("\t".join([label, *cells]) + "\n")
