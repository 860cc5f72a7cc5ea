"""Cheng-Church node deletion/addition used to refine biclusters."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from biswarm.bicluster import Bicluster
from biswarm.expr import ExpressionMatrix, col_contributions, compute_stats, row_contributions

# slack for "contribution <= residue", scaled to the data, so exactly-fitting
# nodes are not rejected over last-bit rounding in the means
_ADD_RTOL = 1e-12


class Phases(enum.Enum):
    FULL = "full"
    ADDITION_ONLY = "addition"


@dataclass(frozen=True)
class LocalSearchConfig:
    delta: float
    alpha: float = 1.2
    max_iterations: int = 500
    phases: Phases = Phases.FULL

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not self.alpha > 1:
            raise ValueError("alpha must exceed 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")


def _keep_one_if_empty(mask: np.ndarray, drop: np.ndarray, scores: np.ndarray) -> np.ndarray:
    """Return ``mask & ~drop``, retaining the lowest-score member if that empties it."""
    kept = mask & ~drop
    if kept.any():
        return kept
    members = np.flatnonzero(mask)
    best = members[np.argmin(scores[members])]
    kept[best] = True
    return kept


def multiple_node_deletion(
    matrix: ExpressionMatrix, bicluster: Bicluster, config: LocalSearchConfig
) -> Bicluster:
    genes, conds = bicluster.gene_mask.copy(), bicluster.cond_mask.copy()
    for _ in range(config.max_iterations):
        st = compute_stats(matrix, Bicluster(genes, conds))
        if st.residue <= config.delta:
            break
        d_rows = row_contributions(matrix, Bicluster(genes, conds), st)
        drop_rows = genes & (d_rows > config.alpha * st.residue)
        genes = _keep_one_if_empty(genes, drop_rows, d_rows)

        st = compute_stats(matrix, Bicluster(genes, conds))
        if st.residue <= config.delta:
            break
        d_cols = col_contributions(matrix, Bicluster(genes, conds), st)
        drop_cols = conds & (d_cols > config.alpha * st.residue)
        conds = _keep_one_if_empty(conds, drop_cols, d_cols)

        if not (drop_rows.any() or drop_cols.any()):
            break
    return Bicluster(genes, conds)


def single_node_deletion(
    matrix: ExpressionMatrix, bicluster: Bicluster, config: LocalSearchConfig
) -> Bicluster:
    """Remove the worst gene or condition one at a time until residue <= delta.

    Ties prefer genes, then the lower index. Each step removes one node, so
    the loop ends after at most |I|+|J| steps; a single row or column always
    has zero residue.
    """
    genes, conds = bicluster.gene_mask.copy(), bicluster.cond_mask.copy()
    while True:
        bc = Bicluster(genes, conds)
        st = compute_stats(matrix, bc)
        if st.residue <= config.delta or genes.sum() <= 1 or conds.sum() <= 1:
            return bc
        d_rows = np.where(genes, row_contributions(matrix, bc, st), -np.inf)
        d_cols = np.where(conds, col_contributions(matrix, bc, st), -np.inf)
        i, j = int(np.argmax(d_rows)), int(np.argmax(d_cols))
        if d_rows[i] >= d_cols[j]:
            genes[i] = False
        else:
            conds[j] = False


def multiple_node_addition(
    matrix: ExpressionMatrix, bicluster: Bicluster, config: LocalSearchConfig
) -> Bicluster:
    """Add every non-member condition, then gene, scoring at most the residue.

    Passes repeat until nothing is added. A sub-step that would lift a
    feasible bicluster above ``delta`` is undone and ends the search; with
    complete data that cannot happen, but with missing cells the means no
    longer form a least-squares fit.
    """
    genes, conds = bicluster.gene_mask.copy(), bicluster.cond_mask.copy()
    st = compute_stats(matrix, Bicluster(genes, conds))
    for _ in range(config.max_iterations):
        added = False
        for axis in ("cond", "gene"):
            bc = Bicluster(genes, conds)
            limit = st.residue + _ADD_RTOL * (st.residue + st.grand_mean**2 + 1.0)
            if axis == "cond":
                pick = ~conds & (col_contributions(matrix, bc, st) <= limit)
            else:
                pick = ~genes & (row_contributions(matrix, bc, st) <= limit)
            if not pick.any():
                continue
            new_genes = genes | pick if axis == "gene" else genes
            new_conds = conds | pick if axis == "cond" else conds
            new_st = compute_stats(matrix, Bicluster(new_genes, new_conds))
            if st.residue <= config.delta < new_st.residue:
                return Bicluster(genes, conds)
            genes, conds, st = new_genes, new_conds, new_st
            added = True
        if not added:
            break
    return Bicluster(genes, conds)


def local_search(
    matrix: ExpressionMatrix, bicluster: Bicluster, config: LocalSearchConfig
) -> Bicluster:
    if config.phases is Phases.ADDITION_ONLY:
        return multiple_node_addition(matrix, bicluster, config)
    bc = multiple_node_deletion(matrix, bicluster, config)
    bc = single_node_deletion(matrix, bc, config)
    return multiple_node_addition(matrix, bc, config)
