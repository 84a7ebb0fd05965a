"""Trial-solution generation: differential mutation, binomial crossover and
polynomial mutation, composed in that order."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import (DEFAULT_EPSILON, EvalCounter, Individual, ProblemDefinition,
                    clip_to_bounds, evaluate)


@dataclass(frozen=True)
class VariationParams:
    """Operator parameters for one run.

    ``force_inherit`` guarantees at least one mutant gene survives the
    crossover; switch it off for the strict textbook behaviour where a full
    row of unlucky draws clones the target.
    """

    p_m: float
    f: float = 0.5
    cr: float = 1.0
    eta_m: float = 20.0
    force_inherit: bool = True

    def __post_init__(self):
        if not 0.0 <= self.f <= 1.0:
            raise ValueError(f"scaling factor f must be in [0, 1], got {self.f}")
        if not 0.0 <= self.cr <= 1.0:
            raise ValueError(f"crossover rate cr must be in [0, 1], got {self.cr}")
        if not 0.0 <= self.p_m <= 1.0:
            raise ValueError(f"mutation probability p_m must be in [0, 1], got {self.p_m}")
        if self.eta_m < 0.0:
            raise ValueError(f"distribution index eta_m must be >= 0, got {self.eta_m}")


def de_mutation(current, r1, r2, f: float) -> np.ndarray:
    """Differential mutation with the current individual as base vector.

    Returns ``current + f * (r1 - r2)`` unclipped; the caller repairs.
    """
    return np.asarray(current, float) + f * (np.asarray(r1, float) - np.asarray(r2, float))


def binomial_crossover(target, mutant, cr: float, rng: np.random.Generator,
                       force_inherit: bool = True) -> np.ndarray:
    """Componentwise mix of target and mutant.

    Each component takes the mutant value when its uniform draw falls below
    ``cr``; with ``force_inherit`` one uniformly chosen component takes the
    mutant value regardless.
    """
    target = np.asarray(target, float)
    mutant = np.asarray(mutant, float)
    take = rng.random(target.size) < cr
    if force_inherit:
        take[int(rng.integers(target.size))] = True
    return np.where(take, mutant, target)


def polynomial_mutation_delta(rho, eta_m: float):
    """Perturbation size in [-1, 1] for a uniform draw ``rho``.

    The quantile of the symmetric polynomial density: the lower branch
    applies for rho <= 0.5 and both branches vanish at 0.5 exactly.
    Accepts scalars or arrays.
    """
    rho = np.asarray(rho, dtype=float)
    exponent = 1.0 / (eta_m + 1.0)
    low = (2.0 * rho) ** exponent - 1.0
    high = 1.0 - (2.0 * (1.0 - rho)) ** exponent
    return np.where(rho <= 0.5, low, high)[()]


def polynomial_mutation(x, problem: ProblemDefinition, p_m: float, eta_m: float,
                        rng: np.random.Generator) -> np.ndarray:
    """Perturb each component with probability ``p_m`` and clip to bounds.

    Consumes two uniform vectors of length n_var per call (hit draws, then
    perturbation draws) regardless of which components mutate, which keeps
    the stream consumption independent of the outcome.
    """
    x = np.asarray(x, float)
    hit = rng.random(x.size) < p_m
    rho = rng.random(x.size)
    delta = polynomial_mutation_delta(rho, eta_m)
    span = problem.upper - problem.lower
    mutated = np.where(hit, x + span * delta, x)
    return clip_to_bounds(mutated, problem)


def generate_offspring(mating_pairs: Sequence[tuple[Individual, Individual]],
                       pool: Sequence[Individual],
                       problem: ProblemDefinition,
                       params: VariationParams,
                       rng: np.random.Generator,
                       counter: EvalCounter | None = None,
                       epsilon: float = DEFAULT_EPSILON) -> list[Individual]:
    """Produce one evaluated trial solution per mating pair.

    For a pair (p1, p2) the base vector is p1 and the difference pair is
    (p2, r2) with r2 drawn uniformly from ``pool`` excluding p1 and p2 by
    identity (falling back to the whole pool when fewer than three distinct
    members exist). The mutant is clipped, crossed with p1, polynomially
    mutated and evaluated, costing one function evaluation per offspring.
    """
    offspring = []
    for first, second in mating_pairs:
        candidates = [ind for ind in pool if ind is not first and ind is not second]
        if not candidates:
            candidates = list(pool)
        partner = candidates[int(rng.integers(len(candidates)))]
        mutant = clip_to_bounds(de_mutation(first.x, second.x, partner.x, params.f), problem)
        trial = binomial_crossover(first.x, mutant, params.cr, rng, params.force_inherit)
        trial = polynomial_mutation(trial, problem, params.p_m, params.eta_m, rng)
        offspring.append(evaluate(problem, trial, epsilon, counter))
    return offspring
