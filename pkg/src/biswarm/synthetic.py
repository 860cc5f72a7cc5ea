"""Synthetic matrices with a planted additive bicluster, for recovery tests."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from biswarm.bicluster import Bicluster
from biswarm.expr import ExpressionMatrix


@dataclass(frozen=True)
class PlantedBlock:
    matrix: ExpressionMatrix
    truth: Bicluster
    delta: float


def planted_block(
    n_genes: int = 60,
    n_conditions: int = 12,
    block_genes: int = 20,
    block_conditions: int = 6,
    background: float = 100.0,
    block_noise: float = 0.0,
    delta: float = 10.0,
    seed: int = 0,
) -> PlantedBlock:
    """Uniform ``[0, background)`` noise with one additive block ``a_i + b_j``.

    Block rows and columns sit at random positions. ``block_noise`` adds
    Gaussian jitter inside the block (block residue ~ ``block_noise**2``).
    With the defaults the block residue is ~0, ``delta`` = 10, and random
    submatrices of the background score in the hundreds.
    """
    rng = np.random.default_rng(seed)
    values = rng.uniform(0.0, background, size=(n_genes, n_conditions))
    genes = np.sort(rng.choice(n_genes, block_genes, replace=False))
    conds = np.sort(rng.choice(n_conditions, block_conditions, replace=False))
    a = rng.uniform(0.0, background / 2, size=block_genes)
    b = rng.uniform(0.0, background / 2, size=block_conditions)
    block = a[:, None] + b[None, :] + rng.normal(0.0, block_noise, size=(block_genes, block_conditions))
    values[np.ix_(genes, conds)] = block
    matrix = ExpressionMatrix.from_array(values)
    truth = Bicluster.from_indices(n_genes, n_conditions, genes, conds)
    return PlantedBlock(matrix, truth, delta)


def cell_jaccard(a: Bicluster, b: Bicluster) -> float:
    """Jaccard index of the two cell sets."""
    shared = int((a.gene_mask & b.gene_mask).sum()) * int((a.cond_mask & b.cond_mask).sum())
    union = a.size + b.size - shared
    return shared / union if union else 0.0
