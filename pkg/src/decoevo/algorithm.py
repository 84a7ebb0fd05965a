"""The main optimization loop: a population and an infeasible archive evolve
together under a strict function-evaluation budget.

Per generation, in order: draw one restricted-mating pair per offspring,
generate and evaluate the trial solutions, select the next population from
parents plus trials, then rebuild the archive from the pre-selection
population, the old archive and the trials. Every stochastic choice draws
from a single seeded stream in that documented order, which makes runs
bit-reproducible from (config, seed).
"""

from __future__ import annotations

import hashlib
import math
import time
from dataclasses import dataclass, field, fields
from typing import Callable, Optional

import numpy as np

from .coevolution import angle_diversity_table, restricted_mating, update_archive
from .metrics import feasible_ratio, final_front, hv_result, igd_result
from .model import EvalCounter, Individual, ProblemDefinition, evaluate
from .problems import MetricUnavailableError, get_problem, reference_front
from .ranking import environmental_selection
from .variation import VariationParams, generate_offspring


@dataclass(frozen=True)
class RunConfig:
    """All parameters of one run. Frozen so a digest can identify a cell.

    ``p_m`` of None means one over the number of decision variables. The
    benchmark-style operator defaults are cr = 1.0 and f = 0.5; a tuned
    preset for engineering-style problems is cr = 0.45, f = 0.70.
    """

    problem: str
    budget: int
    population: int = 100
    f: float = 0.5
    cr: float = 1.0
    p_m: Optional[float] = None
    eta_m: float = 20.0
    epsilon: float = 1e-4
    seed: int = 0
    force_inherit: bool = True
    reversed_archive_norm: bool = True
    archive_from_parents: bool = True
    reference_points: int = 1000

    def __post_init__(self):
        if self.population < 4:
            raise ValueError(f"population must be at least 4, got {self.population}")
        if self.budget < self.population:
            raise ValueError(
                f"budget ({self.budget}) must cover at least the initial population "
                f"({self.population})")
        if not 0.0 <= self.f <= 1.0:
            raise ValueError(f"f must be in [0, 1], got {self.f}")
        if not 0.0 <= self.cr <= 1.0:
            raise ValueError(f"cr must be in [0, 1], got {self.cr}")
        if self.p_m is not None and not 0.0 <= self.p_m <= 1.0:
            raise ValueError(f"p_m must be in [0, 1], got {self.p_m}")
        if self.eta_m < 0.0:
            raise ValueError(f"eta_m must be >= 0, got {self.eta_m}")
        if self.epsilon < 0.0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.reference_points < 1:
            raise ValueError(f"reference_points must be >= 1, got {self.reference_points}")

    def mutation_rate(self, problem: ProblemDefinition) -> float:
        return self.p_m if self.p_m is not None else 1.0 / problem.n_var

    def digest(self) -> str:
        """Short stable hash of every field except the seed; identifies a cell."""
        parts = [f"{f.name}={getattr(self, f.name)!r}"
                 for f in fields(self) if f.name != "seed"]
        return hashlib.sha256("|".join(parts).encode()).hexdigest()[:12]


@dataclass
class AlgorithmState:
    """Mutable state of one run between generations."""

    generation: int
    population: list[Individual]
    archive: list[Individual]
    counter: EvalCounter
    rng: np.random.Generator

    @property
    def fe_used(self) -> int:
        return self.counter.used


@dataclass
class RunRecord:
    """Everything worth persisting about one completed run."""

    problem: str
    config_digest: str
    seed: int
    fe_used: int
    wall_time_s: float
    igd: Optional[float]
    hv: Optional[float]
    feasible_ratio: float
    n_feasible: int
    front: np.ndarray = field(repr=False)
    decisions: np.ndarray = field(repr=False)


def initialize(config: RunConfig, problem: ProblemDefinition,
               rng: np.random.Generator) -> AlgorithmState:
    """Sample and evaluate the initial population; the archive starts empty.

    Costs exactly ``population`` function evaluations.
    """
    counter = EvalCounter()
    samples = rng.uniform(problem.lower, problem.upper,
                          size=(config.population, problem.n_var))
    population = [evaluate(problem, samples[i], config.epsilon, counter)
                  for i in range(config.population)]
    return AlgorithmState(generation=0, population=population, archive=[],
                          counter=counter, rng=rng)


def step(state: AlgorithmState, config: RunConfig,
         problem: ProblemDefinition) -> AlgorithmState:
    """Advance one generation in place (and return the state for chaining).

    Costs exactly ``population`` function evaluations; callers must check the
    remaining budget first.
    """
    n = config.population
    if len(state.archive) >= n:
        ad_main, ad_archive = angle_diversity_table(state.population, state.archive, n)
    else:
        ad_main = ad_archive = None
    pairs = [restricted_mating(state.population, state.archive, n, state.rng,
                               ad_main, ad_archive)
             for _ in range(n)]
    params = VariationParams(p_m=config.mutation_rate(problem), f=config.f,
                             cr=config.cr, eta_m=config.eta_m,
                             force_inherit=config.force_inherit)
    pool = state.population + state.archive
    offspring = generate_offspring(pairs, pool, problem, params, state.rng,
                                   state.counter, config.epsilon)
    parents = state.population
    state.population = environmental_selection(parents, offspring, n)
    archive_source = parents if config.archive_from_parents else state.population
    state.archive = update_archive(archive_source, state.archive, offspring, n,
                                   config.reversed_archive_norm)
    state.generation += 1
    return state


def run(config: RunConfig,
        observer: Optional[Callable[[AlgorithmState], None]] = None) -> RunRecord:
    """Execute one full run and score its final population.

    Generations run while a whole one still fits in the budget. ``observer``
    is invoked after every generation (once the archive update has happened),
    which is how tests and demos watch archive dynamics.
    """
    problem = get_problem(config.problem)
    started = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    state = initialize(config, problem, rng)
    while state.fe_used + config.population <= config.budget:
        step(state, config, problem)
        if observer is not None:
            observer(state)

    try:
        reference = reference_front(problem, config.reference_points)
    except MetricUnavailableError:
        reference = None
    if reference is None:
        igd_value: Optional[float] = None
        hv_value: Optional[float] = None
        n_feasible = sum(1 for ind in state.population if ind.cv == 0.0)
    else:
        igd_res = igd_result(state.population, reference)
        hv_res = hv_result(state.population, reference)
        igd_value = igd_res.value
        hv_value = hv_res.value
        n_feasible = igd_res.n_feasible

    front = final_front(state.population)
    front_objs = (np.array([ind.objectives for ind in front])
                  if front else np.empty((0, problem.n_obj)))
    front_xs = (np.array([ind.x for ind in front])
                if front else np.empty((0, problem.n_var)))
    wall = time.perf_counter() - started
    return RunRecord(problem=config.problem, config_digest=config.digest(),
                     seed=config.seed, fe_used=state.fe_used, wall_time_s=wall,
                     igd=igd_value, hv=hv_value,
                     feasible_ratio=feasible_ratio(state.population),
                     n_feasible=n_feasible, front=front_objs, decisions=front_xs)
