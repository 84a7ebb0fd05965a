"""Coevolution of the infeasible-solution archive with the main population.

The archive keeps infeasible solutions that are non-dominated once the total
violation is treated as an extra objective. It is truncated by repeatedly
deleting the higher-violation member of the closest pair of directions in
normalized objective space, and it feeds parents back into the search through
a restricted mating pool.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import Individual
from .ranking import augmented_dominates, fast_nondominated_sort

ZERO_NORM_TOL = 1e-12


@dataclass(frozen=True)
class NormalizationFrame:
    """Componentwise ideal/nadir estimates over a stated reference set."""

    z_min: np.ndarray
    z_max: np.ndarray


def objective_frame(individuals: Sequence[Individual]) -> NormalizationFrame:
    """Frame spanning the objective extremes of the given individuals."""
    objectives = np.array([ind.objectives for ind in individuals])
    return NormalizationFrame(objectives.min(axis=0), objectives.max(axis=0))


def _normalize_rows(objectives: np.ndarray, frame: NormalizationFrame,
                    reversed_orientation: bool) -> np.ndarray:
    span = frame.z_max - frame.z_min
    out = np.zeros_like(objectives, dtype=float)
    ok = span > 0  # degenerate dimensions normalize to 0
    if reversed_orientation:
        out[:, ok] = (frame.z_max[ok] - objectives[:, ok]) / span[ok]
    else:
        out[:, ok] = (objectives[:, ok] - frame.z_min[ok]) / span[ok]
    return out


def normalize_reversed(ind: Individual, frame: NormalizationFrame) -> np.ndarray:
    """Reversed normalization: 1 at the frame minimum, 0 at the maximum.

    This is the orientation the archive truncation uses.
    """
    return _normalize_rows(ind.objectives[None, :], frame, True)[0]


def normalize_standard(ind: Individual, frame: NormalizationFrame) -> np.ndarray:
    """Standard normalization: 0 at the frame minimum, 1 at the maximum."""
    return _normalize_rows(ind.objectives[None, :], frame, False)[0]


def vector_angle(a, b) -> float:
    """Acute angle between two directions, folding obtuse angles to [0, pi/2].

    The magnitude of the cosine defines the angle, so antiparallel vectors
    are parallel; near-zero vectors (norm below 1e-12) count as parallel to
    everything. Evaluated through the half-angle arctan form, which stays
    exact for identical directions where a plain arccos would round.
    """
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a < ZERO_NORM_TOL or norm_b < ZERO_NORM_TOL:
        return 0.0
    u = a / norm_a
    v = b / norm_b
    if float(np.dot(u, v)) < 0.0:
        v = -v
    return float(2.0 * np.arctan2(np.linalg.norm(u - v), np.linalg.norm(u + v)))


def _angle_matrix(vectors: np.ndarray) -> np.ndarray:
    """Pairwise acute angles between row vectors; same rules as vector_angle."""
    norms = np.linalg.norm(vectors, axis=1)
    safe = np.where(norms < ZERO_NORM_TOL, 1.0, norms)
    unit = vectors / safe[:, None]
    fold = np.where(unit @ unit.T < 0.0, -1.0, 1.0)
    folded = unit[None, :, :] * fold[:, :, None]
    diff = np.linalg.norm(unit[:, None, :] - folded, axis=2)
    total = np.linalg.norm(unit[:, None, :] + folded, axis=2)
    angles = 2.0 * np.arctan2(diff, total)
    degenerate = norms < ZERO_NORM_TOL
    angles[degenerate, :] = 0.0
    angles[:, degenerate] = 0.0
    return angles


def select_infeasible_nondominated(population: Sequence[Individual],
                                   archive: Sequence[Individual],
                                   offspring: Sequence[Individual]) -> list[Individual]:
    """Infeasible members of the violation-augmented first front of the union."""
    union = list(population) + list(archive) + list(offspring)
    fronts = fast_nondominated_sort(union, augmented_dominates, assign_ranks=False)
    return [union[i] for i in fronts[0] if union[i].cv > 0]


def update_archive(population: Sequence[Individual],
                   archive: Sequence[Individual],
                   offspring: Sequence[Individual],
                   capacity: int,
                   reversed_orientation: bool = True) -> list[Individual]:
    """Rebuild the archive from the joint population and truncate to capacity.

    While over capacity, the pair with the smallest mutual angle is found and
    its higher-violation member deleted (the second member on ties). The
    normalization frame and the angle matrix are built once over the
    candidate set and only masked as members drop out.
    """
    survivors = select_infeasible_nondominated(population, archive, offspring)
    if len(survivors) <= capacity:
        return survivors
    frame = objective_frame(survivors)
    normalized = _normalize_rows(np.array([ind.objectives for ind in survivors]),
                                 frame, reversed_orientation)
    angles = _angle_matrix(normalized)
    n = len(survivors)
    angles[np.tril_indices(n)] = np.inf  # consider each pair (i, j) once, i < j
    alive = np.ones(n, dtype=bool)
    remaining = n
    while remaining > capacity:
        i, j = divmod(int(np.argmin(angles)), n)
        drop = i if survivors[j].cv < survivors[i].cv else j
        angles[drop, :] = np.inf
        angles[:, drop] = np.inf
        alive[drop] = False
        remaining -= 1
    return [ind for ind, keep in zip(survivors, alive) if keep]


def angle_diversity(member: Individual, population: Sequence[Individual],
                    frame: NormalizationFrame, capacity: int) -> float:
    """k-th smallest angle from ``member`` to its own population peers.

    k is round(sqrt(capacity)) clamped to the number of peers; a member with
    no peers is maximally diverse (pi/2). Angles are measured on vectors
    normalized by the supplied joint frame.
    """
    others = [ind for ind in population if ind is not member]
    if not others:
        return math.pi / 2
    me = normalize_standard(member, frame)
    angles = sorted(vector_angle(me, normalize_standard(other, frame)) for other in others)
    k = max(1, min(int(round(math.sqrt(capacity))), len(others)))
    return angles[k - 1]


def angle_diversity_table(population: Sequence[Individual],
                          archive: Sequence[Individual],
                          capacity: int) -> tuple[np.ndarray, np.ndarray]:
    """Angle diversity of every member of both groups, one value per member.

    Both groups share the joint normalization frame but each member is only
    compared against its own group. Recomputed once per generation.
    """
    joint = list(population) + list(archive)
    frame = objective_frame(joint)
    k = int(round(math.sqrt(capacity)))

    def group_table(group: Sequence[Individual]) -> np.ndarray:
        if len(group) == 0:
            return np.empty(0)
        if len(group) == 1:
            return np.array([math.pi / 2])
        vectors = _normalize_rows(np.array([ind.objectives for ind in group]), frame, False)
        angles = _angle_matrix(vectors)
        np.fill_diagonal(angles, np.inf)
        kk = max(1, min(k, len(group) - 1))
        return np.partition(angles, kk - 1, axis=1)[:, kk - 1]

    return group_table(population), group_table(archive)


def restricted_mating(population: Sequence[Individual],
                      archive: Sequence[Individual],
                      capacity: int,
                      rng: np.random.Generator,
                      ad_main: np.ndarray | None = None,
                      ad_archive: np.ndarray | None = None) -> tuple[Individual, Individual]:
    """Draw one parent pair from the population and the archive.

    Until the archive is full both parents come uniformly (distinct when
    possible) from the joint population. Once it is full, the first parent
    wins a violation tournament between one population draw and one archive
    draw (ties keep the population draw) and the second parent wins a
    diversity tournament on the precomputed angle-diversity tables (larger
    wins, ties keep the population draw).
    """
    if len(archive) < capacity:
        joint = list(population) + list(archive)
        i = int(rng.integers(len(joint)))
        if len(joint) > 1:
            j = int(rng.integers(len(joint) - 1))
            if j >= i:
                j += 1
        else:
            j = i
        return joint[i], joint[j]
    if ad_main is None or ad_archive is None:
        raise ValueError("angle-diversity tables are required once the archive is full")
    x1 = population[int(rng.integers(len(population)))]
    a1 = archive[int(rng.integers(len(archive)))]
    p1 = x1 if x1.cv <= a1.cv else a1
    xi = int(rng.integers(len(population)))
    ai = int(rng.integers(len(archive)))
    p2 = population[xi] if ad_main[xi] >= ad_archive[ai] else archive[ai]
    return p1, p2
