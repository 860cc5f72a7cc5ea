"""Dominance, crowding distance and the feasible non-dominated archive."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from biswarm.bicluster import Bicluster, ObjectiveVector, overlap_matrix


class EmptyArchiveError(RuntimeError):
    pass


class InsertOutcome(enum.Enum):
    INSERTED = "inserted"
    DOMINATED = "dominated"
    INFEASIBLE = "infeasible"


def _objs(v) -> tuple:
    return v.as_tuple() if isinstance(v, ObjectiveVector) else tuple(v)


def dominates(a, b) -> bool:
    """True if ``a`` is no worse than ``b`` everywhere and strictly better somewhere."""
    a, b = _objs(a), _objs(b)
    better = False
    for x, y in zip(a, b):
        if x > y:
            return False
        if x < y:
            better = True
    return better


def crowding_distances(entries: Sequence) -> list[float]:
    """Deb's crowding distance over minimised objective vectors.

    Lists of one or two entries are all boundary (``inf``). Objectives whose
    range is zero contribute nothing, so they neither mark boundaries nor
    add distance.
    """
    n = len(entries)
    if n <= 2:
        return [float("inf")] * n
    F = np.array([_objs(e) for e in entries], dtype=np.float64)
    dist = np.zeros(n)
    for k in range(F.shape[1]):
        col = F[:, k]
        lo, hi = col.min(), col.max()
        if not hi > lo:
            continue
        order = np.argsort(col, kind="stable")
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
        gaps = (col[order[2:]] - col[order[:-2]]) / (hi - lo)
        dist[order[1:-1]] += gaps
    return dist.tolist()


@dataclass
class ArchiveEntry:
    bicluster: Bicluster
    objectives: ObjectiveVector
    crowding: float = float("inf")
    overlap_score: float = 0.0
    seq: int = -1


def _roulette(weights: np.ndarray, rng: np.random.Generator) -> int:
    total = weights.sum()
    if not total > 0:
        return int(rng.integers(len(weights)))
    cum = np.cumsum(weights)
    idx = int(np.searchsorted(cum, rng.random() * total, side="right"))
    return min(idx, len(weights) - 1)


@dataclass
class ParetoArchive:
    """Mutually non-dominated, all-feasible set of biclusters.

    Entries keep insertion order. ``hard_cap`` bounds the size during
    insertion; :meth:`prune_by_overlap` shrinks the set to ``prune_to``.
    """

    hard_cap: int = 100
    prune_to: int = 50
    entries: list[ArchiveEntry] = field(default_factory=list)
    _counter: itertools.count = field(default_factory=itertools.count, init=False, repr=False)

    def __post_init__(self):
        if self.hard_cap < 1 or self.prune_to < 1:
            raise ValueError("hard_cap and prune_to must be positive")
        if self.prune_to > self.hard_cap:
            raise ValueError("prune_to must not exceed hard_cap")

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def refresh_crowding(self) -> None:
        for e, d in zip(self.entries, crowding_distances([e.objectives for e in self.entries])):
            e.crowding = d

    def try_insert(
        self, candidate: ArchiveEntry, rng: np.random.Generator | None = None
    ) -> InsertOutcome:
        obj = candidate.objectives
        if not obj.feasible:
            return InsertOutcome.INFEASIBLE
        if any(dominates(e.objectives, obj) for e in self.entries):
            return InsertOutcome.DOMINATED
        self.entries = [e for e in self.entries if not dominates(obj, e.objectives)]
        candidate.seq = next(self._counter)
        self.entries.append(candidate)
        if len(self.entries) > self.hard_cap:
            self._evict_one(rng if rng is not None else np.random.default_rng(0))
        return InsertOutcome.INSERTED

    def _evict_one(self, rng: np.random.Generator) -> None:
        # crowded entries go first; boundary (inf) entries only if nothing else is left
        self.refresh_crowding()
        d = np.array([e.crowding for e in self.entries])
        finite = np.isfinite(d)
        if finite.any():
            w = np.where(finite, 1.0 / (1.0 + np.where(finite, d, 0.0)), 0.0)
        else:
            w = np.ones(len(d))
        del self.entries[_roulette(w, rng)]

    def prune_by_overlap(
        self, on_remove: Callable[[ArchiveEntry, list[float]], None] | None = None
    ) -> "ParetoArchive":
        """Greedily drop the most-overlapping entry until ``prune_to`` remain.

        Scores (max overlap with any other entry) and crowding distances are
        recomputed after each removal. Ties go to the lower crowding distance,
        then to the newer entry. ``on_remove`` sees each removed entry with
        the scores of all entries at that step.
        """
        if len(self.entries) <= self.prune_to:
            self._set_overlap_scores()
            return self
        ov = overlap_matrix([e.bicluster for e in self.entries])
        np.fill_diagonal(ov, -np.inf)
        alive = list(range(len(self.entries)))
        while len(alive) > self.prune_to:
            sub = ov[np.ix_(alive, alive)]
            scores = sub.max(axis=1)
            crowd = crowding_distances([self.entries[i].objectives for i in alive])
            victim = max(
                range(len(alive)),
                key=lambda k: (scores[k], -crowd[k], self.entries[alive[k]].seq),
            )
            if on_remove is not None:
                on_remove(self.entries[alive[victim]], scores.tolist())
            del alive[victim]
        self.entries = [self.entries[i] for i in alive]
        self._set_overlap_scores()
        return self

    def _set_overlap_scores(self) -> None:
        if len(self.entries) < 2:
            for e in self.entries:
                e.overlap_score = 0.0
            return
        ov = overlap_matrix([e.bicluster for e in self.entries])
        np.fill_diagonal(ov, -np.inf)
        for e, s in zip(self.entries, ov.max(axis=1)):
            e.overlap_score = float(s)

    def select_entry(self, rng: np.random.Generator) -> ArchiveEntry:
        """Roulette pick weighted by the stored crowding distances.

        Infinite distances weigh twice the largest finite one; if no finite
        distance is positive, infinite entries share the wheel equally.
        """
        if not self.entries:
            raise EmptyArchiveError("cannot select a guide from an empty archive")
        d = np.array([e.crowding for e in self.entries], dtype=np.float64)
        finite = np.isfinite(d)
        top = d[finite].max() if finite.any() else 0.0
        w = np.where(finite, d, 2.0 * top if top > 0 else 1.0)
        entry = self.entries[_roulette(w, rng)]
        assert entry.objectives.feasible, "guide must satisfy the residue constraint"
        return entry

    def select_gbest(self, rng: np.random.Generator) -> Bicluster:
        return self.select_entry(rng).bicluster

    def biclusters(self) -> list[Bicluster]:
        return [e.bicluster for e in self.entries]
