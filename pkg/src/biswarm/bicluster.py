"""Bicluster encoding, the four-objective evaluation and overlap/coverage metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from biswarm.expr import (
    DimensionError,
    EmptySelectionError,
    ExpressionMatrix,
    compute_stats,
)

DEFAULT_EPSILON_VAR = 1e-9


@dataclass(frozen=True, eq=False)
class Bicluster:
    gene_mask: np.ndarray
    cond_mask: np.ndarray

    def __post_init__(self):
        g = np.array(self.gene_mask, dtype=bool).ravel()
        c = np.array(self.cond_mask, dtype=bool).ravel()
        g.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "gene_mask", g)
        object.__setattr__(self, "cond_mask", c)

    @classmethod
    def from_indices(cls, n_genes: int, n_conditions: int, genes, conditions) -> "Bicluster":
        g = np.zeros(n_genes, dtype=bool)
        c = np.zeros(n_conditions, dtype=bool)
        genes = np.asarray(list(genes), dtype=int)
        conditions = np.asarray(list(conditions), dtype=int)
        if genes.size and (genes.min() < 0 or genes.max() >= n_genes):
            raise IndexError("gene index out of range")
        if conditions.size and (conditions.min() < 0 or conditions.max() >= n_conditions):
            raise IndexError("condition index out of range")
        g[genes] = True
        c[conditions] = True
        return cls(g, c)

    @classmethod
    def full(cls, n_genes: int, n_conditions: int) -> "Bicluster":
        return cls(np.ones(n_genes, dtype=bool), np.ones(n_conditions, dtype=bool))

    @classmethod
    def from_position(cls, position: np.ndarray, n_genes: int) -> "Bicluster":
        """Decode an N+M bit string: first N bits genes, the rest conditions."""
        return cls(position[:n_genes], position[n_genes:])

    def to_position(self) -> np.ndarray:
        return np.concatenate([self.gene_mask, self.cond_mask])

    @property
    def genes(self) -> np.ndarray:
        return np.flatnonzero(self.gene_mask)

    @property
    def conditions(self) -> np.ndarray:
        return np.flatnonzero(self.cond_mask)

    @property
    def n_genes(self) -> int:
        return int(self.gene_mask.sum())

    @property
    def n_conditions(self) -> int:
        return int(self.cond_mask.sum())

    @property
    def size(self) -> int:
        return self.n_genes * self.n_conditions

    @property
    def evaluable(self) -> bool:
        return bool(self.gene_mask.any() and self.cond_mask.any())

    def __eq__(self, other):
        if not isinstance(other, Bicluster):
            return NotImplemented
        return np.array_equal(self.gene_mask, other.gene_mask) and np.array_equal(
            self.cond_mask, other.cond_mask
        )

    def __hash__(self):
        return hash((self.gene_mask.tobytes(), self.cond_mask.tobytes()))

    def __repr__(self):
        return f"Bicluster({self.n_genes} genes x {self.n_conditions} conditions)"


@dataclass(frozen=True)
class ObjectiveVector:
    f1: float
    f2: float
    f3: float
    f4: float
    residue: float
    row_variance: float
    feasible: bool
    volume: int = 0

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.f1, self.f2, self.f3, self.f4)


def evaluate(
    matrix: ExpressionMatrix,
    bicluster: Bicluster,
    delta: float,
    epsilon_var: float = DEFAULT_EPSILON_VAR,
) -> ObjectiveVector:
    """Score a bicluster on the four minimised objectives.

    f1 = N/|I| and f2 = M/|J| reward size, f3 = residue/delta rewards
    coherence and f4 = 1/(row variance + epsilon_var) rewards non-flat rows.
    Feasibility is ``residue <= delta`` with no tolerance.
    """
    if not bicluster.evaluable:
        raise EmptySelectionError("bicluster selects no genes or no conditions")
    st = compute_stats(matrix, bicluster)
    return ObjectiveVector(
        f1=matrix.n_genes / bicluster.n_genes,
        f2=matrix.n_conditions / bicluster.n_conditions,
        f3=st.residue / delta,
        f4=1.0 / (st.row_variance + epsilon_var),
        residue=st.residue,
        row_variance=st.row_variance,
        feasible=bool(st.residue <= delta),
        volume=st.volume,
    )


def overlap(a: Bicluster, b: Bicluster) -> float:
    """Shared cells divided by the cell count of the smaller bicluster."""
    if a.gene_mask.shape != b.gene_mask.shape or a.cond_mask.shape != b.cond_mask.shape:
        raise DimensionError("biclusters are bound to different matrix dimensions")
    if not (a.evaluable and b.evaluable):
        return 0.0
    shared = int((a.gene_mask & b.gene_mask).sum()) * int((a.cond_mask & b.cond_mask).sum())
    return shared / min(a.size, b.size)


def overlap_matrix(biclusters: Sequence[Bicluster]) -> np.ndarray:
    """Pairwise :func:`overlap` for a list of biclusters of equal dimensions."""
    k = len(biclusters)
    if k == 0:
        return np.zeros((0, 0))
    G = np.array([b.gene_mask for b in biclusters], dtype=np.int64)
    C = np.array([b.cond_mask for b in biclusters], dtype=np.int64)
    shared = (G @ G.T) * (C @ C.T)
    sizes = G.sum(axis=1) * C.sum(axis=1)
    denom = np.minimum(sizes[:, None], sizes[None, :])
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(denom > 0, shared / np.maximum(denom, 1), 0.0)
    return out


@dataclass(frozen=True)
class Coverage:
    gene_pct: float
    cond_pct: float
    cell_pct: float

    def phrase(self) -> str:
        return (
            f"{self.gene_pct:.2f}% of the genes, {self.cond_pct:.2f}% of the conditions "
            f"and {self.cell_pct:.2f}% cells of the expression matrix"
        )


def coverage(matrix: ExpressionMatrix, biclusters: Iterable[Bicluster]) -> Coverage:
    n, m = matrix.shape
    genes = np.zeros(n, dtype=bool)
    conds = np.zeros(m, dtype=bool)
    cells = np.zeros((n, m), dtype=bool)
    for b in biclusters:
        if b.gene_mask.shape != (n,) or b.cond_mask.shape != (m,):
            raise DimensionError("bicluster masks do not match matrix dimensions")
        genes |= b.gene_mask
        conds |= b.cond_mask
        cells |= np.outer(b.gene_mask, b.cond_mask)
    return Coverage(
        gene_pct=round(100.0 * int(genes.sum()) / n, 2),
        cond_pct=round(100.0 * int(conds.sum()) / m, 2),
        cell_pct=round(100.0 * int(cells.sum()) / (n * m), 2),
    )


def bicluster_to_json(matrix: ExpressionMatrix, bicluster: Bicluster) -> dict:
    st = compute_stats(matrix, bicluster)
    return {
        "genes": [int(i) for i in bicluster.genes],
        "conditions": [int(j) for j in bicluster.conditions],
        "residue": st.residue,
        "row_variance": st.row_variance,
        "volume": st.volume,
    }


def bicluster_from_json(matrix: ExpressionMatrix, obj: dict) -> Bicluster:
    """Inverse of :func:`bicluster_to_json`; raises on empty or out-of-range indices."""
    genes, conds = obj.get("genes", []), obj.get("conditions", [])
    if not genes or not conds:
        raise EmptySelectionError("bicluster JSON has an empty gene or condition list")
    return Bicluster.from_indices(matrix.n_genes, matrix.n_conditions, genes, conds)
