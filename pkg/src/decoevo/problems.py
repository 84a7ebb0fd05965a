"""Built-in constrained test problems, the name registry and reference fronts.

The four built-ins cover the structural features the optimizer has to deal
with: large feasible regions (bnh, srn), a disconnected front sitting on a
constraint boundary (tnk) and an equality-constrained manifold (eq_ring).
New problems register through the same interface, so external suites can be
added without touching the algorithm modules.
"""

from __future__ import annotations

import math
import os
from pathlib import Path
from typing import Callable

import numpy as np

from .model import DEFAULT_EPSILON, ProblemDefinition, violation_components

GRID_RESOLUTION = 500


class UnknownProblemError(KeyError):
    """Raised when a problem name is not in the registry."""


class MetricUnavailableError(RuntimeError):
    """Raised when a metric cannot be computed for a problem (no reference front)."""


_registry: dict[str, Callable[[], ProblemDefinition]] = {}


def register_problem(name: str, factory: Callable[[], ProblemDefinition]) -> None:
    """Register a problem factory under a unique name.

    Performs a self-check: one evaluation at the box midpoint must return
    finite values.
    """
    if name in _registry:
        raise ValueError(f"problem name already registered: {name}")
    problem = factory()
    midpoint = (problem.lower + problem.upper) / 2.0
    objectives, raw = problem.evaluator(midpoint)
    finite = (np.all(np.isfinite(np.asarray(objectives, float)))
              and np.all(np.isfinite(np.asarray(raw, float).reshape(-1))))
    if not finite:
        raise ValueError(f"self-check failed for {name}: midpoint evaluation is not finite")
    _registry[name] = factory


def get_problem(name: str) -> ProblemDefinition:
    """Instantiate a registered problem by name."""
    try:
        factory = _registry[name]
    except KeyError:
        raise UnknownProblemError(
            f"unknown problem {name!r}; registered: {', '.join(sorted(_registry))}") from None
    return factory()


def list_problems() -> list[str]:
    return sorted(_registry)


def reference_front(problem: ProblemDefinition, count: int) -> np.ndarray:
    """Objective-space reference approximation of the constrained Pareto front.

    Analytic problems sample their front parametrically; grid-based problems
    return (up to ``count`` evenly indexed points of) the feasible
    non-dominated subset of a dense decision-space grid, cached on disk.
    """
    if problem.reference_front_generator is None:
        raise MetricUnavailableError(f"no reference front available for {problem.name}")
    return np.asarray(problem.reference_front_generator(count), dtype=float)


def _cache_dir() -> Path:
    env = os.environ.get("DECOEVO_CACHE_DIR")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "decoevo"


def _nondominated_2d(objectives: np.ndarray) -> np.ndarray:
    """Non-dominated subset of 2-D minimization points, sorted by the first
    objective, duplicates removed."""
    order = np.lexsort((objectives[:, 1], objectives[:, 0]))
    kept = []
    best_second = math.inf
    for row in objectives[order]:
        if row[1] < best_second:
            kept.append(row)
            best_second = row[1]
    return np.array(kept)


def _compute_grid_front(problem: ProblemDefinition, resolution: int) -> np.ndarray:
    """Feasible non-dominated objective subset of a decision-space grid.

    Uses the problem's own evaluator point by point, so the resulting front
    is feasible under that evaluator by construction.
    """
    if problem.n_var != 2 or problem.n_obj != 2:
        raise MetricUnavailableError(
            f"grid reference fronts support two variables and two objectives, "
            f"not {problem.name}")
    axes = [np.linspace(problem.lower[k], problem.upper[k], resolution)
            for k in range(problem.n_var)]
    feasible = []
    for x1 in axes[0]:
        for x2 in axes[1]:
            objectives, raw = problem.evaluator(np.array([x1, x2]))
            violation = violation_components(raw, problem.n_ieq, DEFAULT_EPSILON)
            if float(np.sum(violation)) == 0.0:
                feasible.append(np.asarray(objectives, float))
    if not feasible:
        raise MetricUnavailableError(f"grid search found no feasible point for {problem.name}")
    return _nondominated_2d(np.array(feasible))


def _subsample(front: np.ndarray, count: int) -> np.ndarray:
    if count >= len(front):
        return front
    idx = np.round(np.linspace(0, len(front) - 1, count)).astype(int)
    return front[idx]


def grid_front(problem: ProblemDefinition, count: int,
               resolution: int = GRID_RESOLUTION) -> np.ndarray:
    """Cached grid-based reference front, evenly thinned to ``count`` points.

    The cache file holds one objective vector per line, space separated, at
    full precision; writes are atomic (write to a temp file, then rename).
    """
    if count <= 0:
        return np.empty((0, problem.n_obj))
    cache = _cache_dir() / f"{problem.name}_front_grid{resolution}.txt"
    if cache.exists():
        front = np.loadtxt(cache, ndmin=2)
    else:
        front = _compute_grid_front(problem, resolution)
        cache.parent.mkdir(parents=True, exist_ok=True)
        tmp = cache.with_name(f"{cache.name}.{os.getpid()}.tmp")
        np.savetxt(tmp, front, fmt="%.17g")
        os.replace(tmp, cache)
    return _subsample(front, count)


def _grid_front_generator(name: str) -> Callable[[int], np.ndarray]:
    def generator(count: int) -> np.ndarray:
        return grid_front(get_problem(name), count)
    return generator


def bnh() -> ProblemDefinition:
    """Two quadratic bowls with two circular inequality constraints."""
    def evaluator(x):
        x1, x2 = x
        f1 = 4.0 * x1 ** 2 + 4.0 * x2 ** 2
        f2 = (x1 - 5.0) ** 2 + (x2 - 5.0) ** 2
        g1 = (x1 - 5.0) ** 2 + x2 ** 2 - 25.0
        g2 = 7.7 - (x1 - 8.0) ** 2 - (x2 + 3.0) ** 2
        return np.array([f1, f2]), np.array([g1, g2])

    return ProblemDefinition(
        name="bnh", n_var=2, n_obj=2, n_ieq=2, n_con=2,
        lower=np.array([0.0, 0.0]), upper=np.array([5.0, 3.0]),
        evaluator=evaluator, reference_front_generator=_grid_front_generator("bnh"))


def srn() -> ProblemDefinition:
    """Wide search box with a disc constraint and a linear half-plane cut."""
    def evaluator(x):
        x1, x2 = x
        f1 = 2.0 + (x1 - 2.0) ** 2 + (x2 - 1.0) ** 2
        f2 = 9.0 * x1 - (x2 - 1.0) ** 2
        g1 = x1 ** 2 + x2 ** 2 - 225.0
        g2 = x1 - 3.0 * x2 + 10.0
        return np.array([f1, f2]), np.array([g1, g2])

    return ProblemDefinition(
        name="srn", n_var=2, n_obj=2, n_ieq=2, n_con=2,
        lower=np.full(2, -20.0), upper=np.full(2, 20.0),
        evaluator=evaluator, reference_front_generator=_grid_front_generator("srn"))


def tnk() -> ProblemDefinition:
    """Identity objectives with a wavy ring constraint; the front is a set of
    disconnected pieces of the constraint boundary."""
    def evaluator(x):
        x1, x2 = x
        # the angle term tends to 0 as x2 -> 0; substitute the limit directly
        theta = math.atan(x1 / x2) if abs(x2) >= 1e-12 else 0.0
        g1 = -x1 ** 2 - x2 ** 2 + 1.0 + 0.1 * math.cos(16.0 * theta)
        g2 = (x1 - 0.5) ** 2 + (x2 - 0.5) ** 2 - 0.5
        return np.array([x1, x2]), np.array([g1, g2])

    return ProblemDefinition(
        name="tnk", n_var=2, n_obj=2, n_ieq=2, n_con=2,
        lower=np.full(2, 1e-9), upper=np.full(2, math.pi),
        evaluator=evaluator, reference_front_generator=_grid_front_generator("tnk"))


def eq_ring() -> ProblemDefinition:
    """Quarter-circle equality manifold; the feasible set is the front itself.

    Exercises the equality relaxation: cv = max(0, |x1^2 + x2^2 - 1| - eps).
    """
    def evaluator(x):
        h = x[0] ** 2 + x[1] ** 2 - 1.0
        return np.array([x[0], x[1]]), np.array([h])

    def generator(count: int) -> np.ndarray:
        if count <= 0:
            return np.empty((0, 2))
        if count == 1:
            t = np.array([math.pi / 4.0])
        else:
            t = np.linspace(0.0, math.pi / 2.0, count)
        return np.column_stack([np.cos(t), np.sin(t)])

    return ProblemDefinition(
        name="eq_ring", n_var=2, n_obj=2, n_ieq=0, n_con=1,
        lower=np.zeros(2), upper=np.full(2, 1.2),
        evaluator=evaluator, reference_front_generator=generator)


register_problem("bnh", bnh)
register_problem("srn", srn)
register_problem("tnk", tnk)
register_problem("eq_ring", eq_ring)
