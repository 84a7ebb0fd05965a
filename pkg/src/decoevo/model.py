"""Core data model: problems, individuals, evaluation and violation arithmetic.

Every other module consumes these types. Constraint handling follows the
usual convention for box-bounded problems: the first ``n_ieq`` raw constraint
values are inequalities (satisfied when <= 0) and the remaining ones are
equalities, relaxed to a band of width ``epsilon`` around zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

# evaluator: decision vector -> (objectives, raw constraint values)
Evaluator = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]
# reference front generator: point count -> (count, n_obj) objective array
FrontGenerator = Callable[[int], np.ndarray]

DEFAULT_EPSILON = 1e-4


class EvalCounter:
    """Mutable tally of objective-function evaluations spent so far."""

    __slots__ = ("used",)

    def __init__(self, used: int = 0):
        self.used = used

    def __repr__(self):
        return f"EvalCounter(used={self.used})"


@dataclass(frozen=True, eq=False)
class ProblemDefinition:
    """A box-bounded minimization problem with mixed constraints.

    ``evaluator`` must be pure and deterministic; it receives one in-bounds
    decision vector and returns the objective vector together with the raw
    constraint values (length ``n_con``, inequalities first).
    """

    name: str
    n_var: int
    n_obj: int
    n_ieq: int
    n_con: int
    lower: np.ndarray
    upper: np.ndarray
    evaluator: Evaluator
    reference_front_generator: Optional[FrontGenerator] = None

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if self.n_var < 1:
            raise ValueError(f"{self.name}: n_var must be >= 1")
        if self.n_obj < 2:
            raise ValueError(f"{self.name}: n_obj must be >= 2")
        if not 0 <= self.n_ieq <= self.n_con:
            raise ValueError(f"{self.name}: need 0 <= n_ieq <= n_con")
        if lower.shape != (self.n_var,) or upper.shape != (self.n_var,):
            raise ValueError(f"{self.name}: bounds must have length n_var")
        if not np.all(lower < upper):
            raise ValueError(f"{self.name}: lower bounds must lie strictly below upper bounds")


@dataclass(eq=False)
class Individual:
    """One evaluated candidate: decision vector plus cached evaluation results.

    ``rank`` and ``crowding`` are bookkeeping slots owned by the selection
    step that writes them; they stay ``None`` until then. Identity semantics
    are intentional: the same object may be referenced by both the population
    and the archive.
    """

    x: np.ndarray
    objectives: np.ndarray
    constraints: np.ndarray
    cv: float
    rank: Optional[int] = None
    crowding: Optional[float] = None

    @property
    def feasible(self) -> bool:
        return self.cv == 0.0


def constraint_violation_component(raw: float, index: int, n_ieq: int,
                                   epsilon: float = DEFAULT_EPSILON) -> float:
    """Violation magnitude of a single raw constraint value.

    Inequality positions (``index < n_ieq``) violate by ``max(0, raw)``;
    equality positions by ``max(0, |raw| - epsilon)``.
    """
    if index < n_ieq:
        return max(0.0, raw)
    return max(0.0, abs(raw) - epsilon)


def violation_components(raw, n_ieq: int, epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
    """Componentwise violation magnitudes for a raw constraint vector."""
    raw = np.asarray(raw, dtype=float)
    out = np.maximum(raw, 0.0)
    if raw.size > n_ieq:
        out[n_ieq:] = np.maximum(np.abs(raw[n_ieq:]) - epsilon, 0.0)
    return out


def total_cv(components) -> float:
    """Total constraint violation: the sum of non-negative components."""
    return float(np.sum(components))


def evaluate(problem: ProblemDefinition, x, epsilon: float = DEFAULT_EPSILON,
             counter: Optional[EvalCounter] = None) -> Individual:
    """Evaluate one decision vector and return a fully populated Individual.

    Spends exactly one function evaluation on ``counter`` when one is given.
    Callers are responsible for repairing out-of-bounds vectors first.
    Non-finite evaluator output is flagged by setting cv to +inf, so the
    individual loses every feasibility comparison instead of crashing a run.
    """
    x = np.array(x, dtype=float)
    if x.shape != (problem.n_var,):
        raise ValueError(
            f"{problem.name}: expected decision vector of length {problem.n_var}, "
            f"got shape {x.shape}")
    objectives, raw = problem.evaluator(x)
    objectives = np.asarray(objectives, dtype=float).reshape(-1)
    raw = np.asarray(raw, dtype=float).reshape(-1)
    if objectives.shape != (problem.n_obj,):
        raise ValueError(f"{problem.name}: evaluator returned {objectives.size} objectives, "
                         f"expected {problem.n_obj}")
    if raw.shape != (problem.n_con,):
        raise ValueError(f"{problem.name}: evaluator returned {raw.size} constraint values, "
                         f"expected {problem.n_con}")
    if counter is not None:
        counter.used += 1
    if np.all(np.isfinite(objectives)) and np.all(np.isfinite(raw)):
        cv = total_cv(violation_components(raw, problem.n_ieq, epsilon))
    else:
        cv = math.inf
    return Individual(x=x, objectives=objectives, constraints=raw, cv=cv)


def augmented_objectives(ind: Individual) -> np.ndarray:
    """Objectives extended with the total violation as an extra component."""
    return np.append(ind.objectives, ind.cv)


def clip_to_bounds(x, problem: ProblemDefinition) -> np.ndarray:
    """Clamp a decision vector into the problem's box, componentwise."""
    return np.clip(np.asarray(x, dtype=float), problem.lower, problem.upper)
