"""Dominance relations, fast non-dominated sorting and crowding-based selection."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .model import Individual, augmented_objectives


def pareto_dominates(a, b) -> bool:
    """True when vector ``a`` is no worse than ``b`` everywhere and better somewhere."""
    if len(a) != len(b):
        raise ValueError("objective vectors must have equal length")
    better = False
    for ai, bi in zip(a, b):
        if ai > bi:
            return False
        if ai < bi:
            better = True
    return better


def objective_dominates(a: Individual, b: Individual) -> bool:
    """Pareto dominance on raw objectives."""
    return pareto_dominates(a.objectives, b.objectives)


def augmented_dominates(a: Individual, b: Individual) -> bool:
    """Pareto dominance on objectives extended with the total violation."""
    return pareto_dominates(augmented_objectives(a), augmented_objectives(b))


def cdp_dominates(a: Individual, b: Individual) -> bool:
    """Feasibility-first comparison.

    A feasible solution beats any infeasible one; among infeasible solutions
    the lower total violation wins; among feasible solutions plain Pareto
    dominance decides.
    """
    a_feasible = a.cv == 0.0
    b_feasible = b.cv == 0.0
    if a_feasible and not b_feasible:
        return True
    if not a_feasible:
        if b_feasible:
            return False
        return a.cv < b.cv
    return pareto_dominates(a.objectives, b.objectives)


def _pareto_matrix(vectors: np.ndarray) -> np.ndarray:
    n = vectors.shape[0]
    less_equal = np.ones((n, n), dtype=bool)
    less = np.zeros((n, n), dtype=bool)
    for j in range(vectors.shape[1]):  # accumulate per objective, no 3-d temporaries
        column = vectors[:, j]
        less_equal &= column[:, None] <= column[None, :]
        less |= column[:, None] < column[None, :]
    return less_equal & less


def _cdp_matrix(objectives: np.ndarray, cv: np.ndarray) -> np.ndarray:
    feasible = cv == 0.0
    row_feas = feasible[:, None]
    col_feas = feasible[None, :]
    pareto = _pareto_matrix(objectives)
    return ((row_feas & ~col_feas)
            | (~row_feas & ~col_feas & (cv[:, None] < cv[None, :]))
            | (row_feas & col_feas & pareto))


def _dominance_matrix(pop: Sequence[Individual], dominates: Callable) -> np.ndarray:
    # The canonical comparators get vectorised matrix construction; any other
    # callable is applied pairwise. Both routes are deterministic.
    if dominates is cdp_dominates or dominates is objective_dominates or dominates is augmented_dominates:
        objectives = np.array([ind.objectives for ind in pop])
        if dominates is cdp_dominates:
            return _cdp_matrix(objectives, np.array([ind.cv for ind in pop]))
        if dominates is augmented_dominates:
            objectives = np.column_stack([objectives, [ind.cv for ind in pop]])
        return _pareto_matrix(objectives)
    n = len(pop)
    matrix = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in range(n):
            if i != j:
                matrix[i, j] = dominates(pop[i], pop[j])
    return matrix


def fast_nondominated_sort(pop: Sequence[Individual],
                           dominates: Callable = cdp_dominates,
                           assign_ranks: bool = True) -> list[list[int]]:
    """Partition a population into non-domination fronts.

    Returns the fronts as lists of indices into ``pop``, best front first,
    preserving input order within each front. When ``assign_ranks`` is set,
    each individual's ``rank`` field is written with its front level.
    """
    if len(pop) == 0:
        raise ValueError("cannot sort an empty population")
    dominance = _dominance_matrix(pop, dominates)
    n_dominators = dominance.sum(axis=0).astype(np.int64)
    alive = np.ones(len(pop), dtype=bool)
    fronts: list[list[int]] = []
    while alive.any():
        current = np.flatnonzero(alive & (n_dominators == 0))
        if current.size == 0:  # cannot happen for a strict partial order
            current = np.flatnonzero(alive)
        fronts.append(current.tolist())
        alive[current] = False
        n_dominators -= dominance[current].sum(axis=0).astype(np.int64)
    if assign_ranks:
        for level, front in enumerate(fronts):
            for i in front:
                pop[i].rank = level
    return fronts


def crowding_distance(front: Sequence[Individual]) -> np.ndarray:
    """Crowding distance of each member of one front.

    Boundary solutions of every objective get +inf; interior solutions sum
    the neighbour gap divided by the objective range. An objective with zero
    range contributes nothing. Fronts of size <= 2 are all-boundary.
    """
    k = len(front)
    if k <= 2:
        return np.full(k, np.inf)
    objectives = np.array([ind.objectives for ind in front])
    distance = np.zeros(k)
    for j in range(objectives.shape[1]):
        order = np.argsort(objectives[:, j], kind="stable")
        column = objectives[order, j]
        span = column[-1] - column[0]
        distance[order[0]] = np.inf
        distance[order[-1]] = np.inf
        if span > 0:
            distance[order[1:-1]] += (column[2:] - column[:-2]) / span
    return distance


def environmental_selection(current: Sequence[Individual],
                            offspring: Sequence[Individual],
                            capacity: int) -> list[Individual]:
    """Keep the best ``capacity`` members of current plus offspring.

    Whole fronts (under the feasibility-first comparator) are taken while
    they fit; the first front that overflows is truncated by descending
    crowding distance, ties keeping input order. If the union is smaller
    than the capacity everything is returned.
    """
    union = list(current) + list(offspring)
    fronts = fast_nondominated_sort(union, cdp_dominates)
    selected: list[Individual] = []
    for front in fronts:
        members = [union[i] for i in front]
        crowd = crowding_distance(members)
        for ind, value in zip(members, crowd):
            ind.crowding = float(value)
        if len(selected) + len(members) <= capacity:
            selected.extend(members)
            if len(selected) == capacity:
                break
        else:
            room = capacity - len(selected)
            order = sorted(range(len(members)), key=lambda i: -crowd[i])
            selected.extend(members[i] for i in order[:room])
            break
    return selected
