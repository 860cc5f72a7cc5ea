"""Binary multi-objective PSO for biclustering, hybridised with local search.

Each particle is an N+M bit string (genes then conditions). Velocities are
real, clamped to ``[-v_max, v_max]``, and bits are resampled through a
sigmoid of the velocity. Feasible particles feed a Pareto archive which is
refined by node addition and pruned by overlap every generation.

Randomness: every particle draws from its own stream keyed by
``(seed, generation, particle index)`` and archive operations draw from a
stream keyed by ``(seed, generation)``, so the result does not depend on
the order in which particles are processed.
"""

from __future__ import annotations

import dataclasses
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from biswarm.bicluster import (
    DEFAULT_EPSILON_VAR,
    Bicluster,
    ObjectiveVector,
    coverage,
    evaluate,
)
from biswarm.expr import DegenerateSubmatrixError, ExpressionMatrix
from biswarm.local_search import LocalSearchConfig, Phases, local_search
from biswarm.pareto import ArchiveEntry, ParetoArchive, dominates

log = logging.getLogger(__name__)

MAX_INIT_RETRIES = 5

# stream tags; particle streams use non-negative indices
_INIT = 1
_INIT_ARCHIVE = 2
_LOOP = 3
_ARCHIVE = 4


class InfeasibleError(RuntimeError):
    def __init__(self, delta: float):
        super().__init__(
            f"no bicluster with residue <= delta={delta:g} and nonzero row variance "
            f"found after {MAX_INIT_RETRIES} re-initialisations"
        )
        self.delta = delta


@dataclass(frozen=True)
class PsoParams:
    delta: float
    pop_size: int = 200
    max_gen: int = 100
    w: float = 0.729
    c1: float = 1.49445
    c2: float = 1.49445
    v_max: float = 4.0
    mutation_prob: float = 0.3
    alpha: float = 1.2
    init_gene_prob: float = 0.5
    init_cond_prob: float = 0.5
    seed: int = 0
    archive_cap: int = 100
    prune_to: int = 50
    ls_max_iterations: int = 500
    epsilon_var: float = DEFAULT_EPSILON_VAR
    reject_flat: bool = True

    def __post_init__(self):
        problems = []
        if not self.delta > 0:
            problems.append("delta must be positive")
        if self.pop_size < 2:
            problems.append("pop_size must be at least 2")
        if self.max_gen < 1:
            problems.append("max_gen must be at least 1")
        if not 0 <= self.mutation_prob <= 1:
            problems.append("mutation_prob must lie in [0, 1]")
        if not self.v_max > 0:
            problems.append("v_max must be positive")
        if not self.alpha > 1:
            problems.append("alpha must exceed 1")
        for name in ("init_gene_prob", "init_cond_prob"):
            if not 0 < getattr(self, name) < 1:
                problems.append(f"{name} must lie in (0, 1)")
        if self.archive_cap < 1 or self.prune_to < 1 or self.prune_to > self.archive_cap:
            problems.append("need 1 <= prune_to <= archive_cap")
        if problems:
            raise ValueError("; ".join(problems))

    def local_search_config(self, phases: Phases) -> LocalSearchConfig:
        return LocalSearchConfig(self.delta, self.alpha, self.ls_max_iterations, phases)


@dataclass
class Particle:
    position: np.ndarray
    velocity: np.ndarray
    pbest_position: np.ndarray
    pbest_objectives: ObjectiveVector | None = None
    current_objectives: ObjectiveVector | None = None


def stream(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for ``(seed, *keys)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed % 2**64, *keys])))


def sigmoid(v):
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-np.asarray(v, dtype=np.float64)))


def update_velocity(
    p: Particle, gbest: np.ndarray, params: PsoParams, rng: np.random.Generator
) -> Particle:
    # c1 pulls toward the archive guide and c2 toward the personal best
    s = p.position.astype(np.float64)
    r1 = rng.random(s.size)
    r2 = rng.random(s.size)
    v = (
        params.w * p.velocity
        + params.c1 * r1 * (np.asarray(gbest, dtype=np.float64) - s)
        + params.c2 * r2 * (p.pbest_position.astype(np.float64) - s)
    )
    return dataclasses.replace(p, velocity=np.clip(v, -params.v_max, params.v_max))


def update_position(p: Particle, rng: np.random.Generator) -> Particle:
    r3 = rng.random(p.velocity.size)
    return dataclasses.replace(p, position=r3 < sigmoid(p.velocity))


MUTATION_FLIP, MUTATION_ADD_GENE, MUTATION_ADD_COND = 0, 1, 2


def mutate(
    p: Particle,
    params: PsoParams,
    rng: np.random.Generator,
    n_genes: int,
    operator: int | None = None,
) -> Particle:
    """With probability ``mutation_prob`` apply one of three operators.

    Operators, chosen uniformly unless ``operator`` is given: flip a random
    bit, switch on a random unselected gene, switch on a random unselected
    condition. Adding to a fully selected section is a no-op.
    """
    if rng.random() >= params.mutation_prob:
        return p
    if operator is None:
        operator = int(rng.integers(3))
    pos = p.position.copy()
    if operator == MUTATION_FLIP:
        d = int(rng.integers(pos.size))
        pos[d] = not pos[d]
    else:
        lo, hi = (0, n_genes) if operator == MUTATION_ADD_GENE else (n_genes, pos.size)
        off = np.flatnonzero(~pos[lo:hi])
        if off.size == 0:
            return p
        pos[lo + off[rng.integers(off.size)]] = True
    return dataclasses.replace(p, position=pos)


def repair(position: np.ndarray, n_genes: int, rng: np.random.Generator) -> np.ndarray:
    """Switch on one random bit in an empty gene or condition section."""
    pos = position
    for lo, hi in ((0, n_genes), (n_genes, position.size)):
        if not pos[lo:hi].any():
            if pos is position:
                pos = position.copy()
            pos[lo + int(rng.integers(hi - lo))] = True
    return pos


def update_pbest(p: Particle, rng: np.random.Generator) -> Particle:
    cur, best = p.current_objectives, p.pbest_objectives
    if best is None or dominates(cur, best):
        replace = True
    elif dominates(best, cur):
        replace = False
    else:
        replace = rng.random() < 0.5
    if not replace:
        return p
    return dataclasses.replace(p, pbest_position=p.position.copy(), pbest_objectives=cur)


@dataclass
class RunReport:
    seed: int
    params: dict
    generations: list[dict] = field(default_factory=list)
    total_seconds: float = 0.0
    coverage: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _evaluate(matrix: ExpressionMatrix, position: np.ndarray, params: PsoParams) -> ObjectiveVector:
    bc = Bicluster.from_position(position, matrix.n_genes)
    try:
        return evaluate(matrix, bc, params.delta, params.epsilon_var)
    except DegenerateSubmatrixError:
        # every selected cell is missing: worst possible, never feasible
        return ObjectiveVector(
            f1=matrix.n_genes / bc.n_genes,
            f2=matrix.n_conditions / bc.n_conditions,
            f3=np.inf,
            f4=np.inf,
            residue=np.inf,
            row_variance=0.0,
            feasible=False,
        )


def _init_particle(matrix: ExpressionMatrix, params: PsoParams, rng: np.random.Generator) -> Particle:
    n, m = matrix.shape
    pos = np.concatenate(
        [rng.random(n) < params.init_gene_prob, rng.random(m) < params.init_cond_prob]
    )
    pos = repair(pos, n, rng)
    try:
        refined = local_search(
            matrix, Bicluster.from_position(pos, n), params.local_search_config(Phases.FULL)
        )
        pos = refined.to_position()
    except DegenerateSubmatrixError:
        pass
    obj = _evaluate(matrix, pos, params)
    return Particle(
        position=pos,
        velocity=np.zeros(n + m),
        pbest_position=pos.copy(),
        pbest_objectives=obj,
        current_objectives=obj,
    )


def _move(
    matrix: ExpressionMatrix,
    params: PsoParams,
    p: Particle,
    guide: np.ndarray,
    rng: np.random.Generator,
) -> Particle:
    n = matrix.n_genes
    p = update_velocity(p, guide, params, rng)
    p = update_position(p, rng)
    p = mutate(p, params, rng, n)
    pos = repair(p.position, n, rng)
    return dataclasses.replace(p, position=pos, current_objectives=_evaluate(matrix, pos, params))


def _entry(matrix: ExpressionMatrix, bc: Bicluster, params: PsoParams) -> ArchiveEntry:
    return ArchiveEntry(bc, evaluate(matrix, bc, params.delta, params.epsilon_var))


def _submit(
    archive: ParetoArchive,
    entry: ArchiveEntry,
    params: PsoParams,
    rng: np.random.Generator,
) -> None:
    """Offer a candidate to the archive.

    Infeasible candidates and copies of a bicluster already archived are
    skipped; so are flat ones (zero row variance) unless ``reject_flat`` is
    off. A single column always has zero residue and would otherwise grow
    into an undominated all-genes column.
    """
    obj = entry.objectives
    if not obj.feasible:
        return
    if params.reject_flat and not obj.row_variance > 0:
        return
    if any(e.bicluster == entry.bicluster for e in archive.entries):
        return
    archive.try_insert(entry, rng)


def run(
    matrix: ExpressionMatrix,
    params: PsoParams,
    hook: Callable[[int, list[Particle], ParetoArchive], None] | None = None,
    workers: int = 1,
) -> tuple[ParetoArchive, RunReport]:
    """Run the hybrid swarm and return the final archive with a run trace.

    ``hook(gen, particles, archive)`` is called after every generation
    (``gen`` = -1 after initialisation). ``workers`` > 1 moves and scores
    particles on a thread pool; results are identical for any value.
    """
    t0 = time.perf_counter()
    addition = params.local_search_config(Phases.ADDITION_ONLY)
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    pmap = pool.map if pool else map

    try:
        for attempt in range(MAX_INIT_RETRIES + 1):
            archive = ParetoArchive(params.archive_cap, params.prune_to)
            rngs = [stream(params.seed, _INIT, attempt, i) for i in range(params.pop_size)]
            particles = list(pmap(lambda r: _init_particle(matrix, params, r), rngs))
            arng = stream(params.seed, _INIT_ARCHIVE, attempt)
            for p in particles:
                bc = Bicluster.from_position(p.position, matrix.n_genes)
                _submit(archive, ArchiveEntry(bc, p.current_objectives), params, arng)
            if len(archive):
                break
            log.warning("initial population has no feasible bicluster (attempt %d)", attempt)
        else:
            raise InfeasibleError(params.delta)

        report = RunReport(seed=params.seed, params=dataclasses.asdict(params))
        if hook:
            hook(-1, particles, archive)

        for gen in range(params.max_gen):
            archive.refresh_crowding()
            arng = stream(params.seed, _ARCHIVE, gen)
            guides = [archive.select_gbest(arng).to_position() for _ in particles]
            rngs = [stream(params.seed, _LOOP, gen, i) for i in range(len(particles))]
            particles = list(
                pmap(lambda a: _move(matrix, params, *a), zip(particles, guides, rngs))
            )

            for p in particles:
                bc = Bicluster.from_position(p.position, matrix.n_genes)
                _submit(archive, ArchiveEntry(bc, p.current_objectives), params, arng)

            current = archive.biclusters()
            refined = list(pmap(lambda b: local_search(matrix, b, addition), current))
            fresh = [r for b, r in zip(current, refined) if r != b]
            for entry in pmap(lambda b: _entry(matrix, b, params), fresh):
                _submit(archive, entry, params, arng)

            particles = [update_pbest(p, r) for p, r in zip(particles, rngs)]
            archive.prune_by_overlap()

            cov = coverage(matrix, archive.biclusters())
            report.generations.append(
                {
                    "gen": gen,
                    "archive_size": len(archive),
                    "best_residue": min(e.objectives.residue for e in archive),
                    "coverage_cells_pct": cov.cell_pct,
                }
            )
            log.debug("gen %d: archive %d, cells %.2f%%", gen, len(archive), cov.cell_pct)
            if hook:
                hook(gen, particles, archive)
    finally:
        if pool:
            pool.shutdown()

    report.coverage = dataclasses.asdict(coverage(matrix, archive.biclusters()))
    report.total_seconds = time.perf_counter() - t0
    return archive, report
