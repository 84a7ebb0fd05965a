"""Front quality indicators and the rank-sum comparison machinery.

Metrics follow the usual benchmark conventions: they only consider the
feasible members of a final population, reduced to their non-dominated
subset, and evaluate to NaN when that subset is empty.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist
from scipy.stats import rankdata

from .model import Individual
from .ranking import fast_nondominated_sort, objective_dominates

HV_REFERENCE_OFFSET = 1.1  # reference point in normalized objective space
SIGNIFICANCE_LEVEL = 0.05


@dataclass(frozen=True)
class MetricResult:
    """A metric value together with the feasibility context it came from.

    ``value`` is NaN exactly when ``n_feasible`` is zero.
    """

    value: float
    n_feasible: int
    n_nondominated: int


@dataclass(frozen=True)
class ComparisonVerdict:
    """Outcome of a two-sample comparison.

    ``symbol`` is "+" when sample a is significantly better, "-" when worse,
    "=" otherwise. NaN entries are dropped before testing; a side losing all
    of its entries loses outright with p = 0.
    """

    symbol: str
    p_value: float
    mean_a: float
    mean_b: float
    median_a: float
    median_b: float
    n_dropped_a: int = 0
    n_dropped_b: int = 0


def final_front(population: Sequence[Individual]) -> list[Individual]:
    """Feasible members reduced to their mutually non-dominated subset."""
    feasible = [ind for ind in population if ind.cv == 0.0]
    if not feasible:
        return []
    fronts = fast_nondominated_sort(feasible, objective_dominates, assign_ranks=False)
    return [feasible[i] for i in fronts[0]]


def igd(front, reference) -> float:
    """Mean distance from each reference point to its nearest front point.

    Lower is better. Returns NaN for an empty front; an empty reference set
    is a configuration error.
    """
    reference = np.atleast_2d(np.asarray(reference, float))
    if reference.size == 0:
        raise ValueError("reference front must be non-empty")
    front = np.atleast_2d(np.asarray(front, float))
    if front.size == 0:
        return math.nan
    return float(cdist(reference, front).min(axis=1).mean())


def dominated_volume(points, ref_point) -> float:
    """Exact measure of the region dominated by ``points`` up to ``ref_point``.

    Minimization orientation: a point contributes the box between itself and
    the reference point, and points not strictly below the reference point in
    every coordinate are discarded. Supports two and three objectives.
    """
    pts = np.atleast_2d(np.asarray(points, float))
    ref = np.asarray(ref_point, float)
    if pts.size == 0:
        return 0.0
    pts = pts[np.all(pts < ref, axis=1)]
    if pts.size == 0:
        return 0.0
    m = pts.shape[1]
    if m == 2:
        return _sweep_2d(pts, ref)
    if m == 3:
        return _slices_3d(pts, ref)
    raise ValueError(f"hypervolume supports at most three objectives, got {m}")


def _sweep_2d(pts: np.ndarray, ref: np.ndarray) -> float:
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    volume = 0.0
    lowest_second = ref[1]
    for a, b in pts[order]:
        if b < lowest_second:
            volume += (ref[0] - a) * (lowest_second - b)
            lowest_second = b
    return float(volume)


def _slices_3d(pts: np.ndarray, ref: np.ndarray) -> float:
    order = np.argsort(pts[:, 2], kind="stable")
    pts = pts[order]
    volume = 0.0
    for i in range(len(pts)):
        top = pts[i + 1, 2] if i + 1 < len(pts) else ref[2]
        thickness = top - pts[i, 2]
        if thickness > 0:
            volume += _sweep_2d(pts[: i + 1, :2], ref[:2]) * thickness
    return float(volume)


def hypervolume(front, reference_front) -> float:
    """Hypervolume of the front normalized by the reference front's extremes.

    Front points are scaled so the reference front spans the unit box, then
    measured against the reference point (1.1, ..., 1.1). Higher is better.
    Returns NaN for an empty front.
    """
    reference_front = np.atleast_2d(np.asarray(reference_front, float))
    if reference_front.size == 0:
        raise ValueError("reference front must be non-empty")
    front = np.atleast_2d(np.asarray(front, float))
    if front.size == 0:
        return math.nan
    m = front.shape[1]
    if m > 3:
        raise ValueError(f"hypervolume supports at most three objectives, got {m}")
    ideal = reference_front.min(axis=0)
    nadir = reference_front.max(axis=0)
    span = np.where(nadir > ideal, nadir - ideal, 1.0)
    scaled = (front - ideal) / span
    return dominated_volume(scaled, np.full(m, HV_REFERENCE_OFFSET))


def feasible_ratio(population: Sequence[Individual]) -> float:
    """Fraction of members with zero total violation."""
    if not population:
        return 0.0
    return sum(1 for ind in population if ind.cv == 0.0) / len(population)


def _front_result(population: Sequence[Individual], value_fn) -> MetricResult:
    front = final_front(population)
    n_feasible = sum(1 for ind in population if ind.cv == 0.0)
    if not front:
        return MetricResult(math.nan, n_feasible, 0)
    objectives = np.array([ind.objectives for ind in front])
    return MetricResult(value_fn(objectives), n_feasible, len(front))


def igd_result(population: Sequence[Individual], reference) -> MetricResult:
    return _front_result(population, lambda objs: igd(objs, reference))


def hv_result(population: Sequence[Individual], reference) -> MetricResult:
    return _front_result(population, lambda objs: hypervolume(objs, reference))


def wilcoxon_rank_sum(sample_a, sample_b, larger_is_better: bool = True) -> ComparisonVerdict:
    """Two-sided rank-sum comparison with tie and continuity corrections.

    Uses the normal approximation (appropriate for the usual 30-run samples).
    NaN entries, standing for runs without any feasible solution, are dropped
    first; a side that loses every entry loses the comparison outright, and
    two empty sides compare equal with p = 1.
    """
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    clean_a = a[~np.isnan(a)]
    clean_b = b[~np.isnan(b)]
    dropped_a = a.size - clean_a.size
    dropped_b = b.size - clean_b.size
    if clean_a.size == 0 and clean_b.size == 0:
        return ComparisonVerdict("=", 1.0, math.nan, math.nan, math.nan, math.nan,
                                 dropped_a, dropped_b)
    if clean_a.size == 0:
        return ComparisonVerdict("-", 0.0, math.nan, float(clean_b.mean()),
                                 math.nan, float(np.median(clean_b)), dropped_a, dropped_b)
    if clean_b.size == 0:
        return ComparisonVerdict("+", 0.0, float(clean_a.mean()), math.nan,
                                 float(np.median(clean_a)), math.nan, dropped_a, dropped_b)

    n1, n2 = clean_a.size, clean_b.size
    n = n1 + n2
    ranks = rankdata(np.concatenate([clean_a, clean_b]))
    rank_sum = float(ranks[:n1].sum())
    mean_rank_sum = n1 * (n + 1) / 2.0
    # tie correction over groups of equal pooled values
    _, counts = np.unique(np.concatenate([clean_a, clean_b]), return_counts=True)
    tie_sum = float(np.sum(counts.astype(float) ** 3 - counts))
    variance = n1 * n2 / 12.0 * ((n + 1) - tie_sum / (n * (n - 1)))
    if variance <= 0:
        p_value = 1.0
    else:
        z = (abs(rank_sum - mean_rank_sum) - 0.5) / math.sqrt(variance)
        p_value = 1.0 if z <= 0 else math.erfc(z / math.sqrt(2.0))

    mean_rank_a = rank_sum / n1
    mean_rank_b = (float(ranks.sum()) - rank_sum) / n2
    if p_value >= SIGNIFICANCE_LEVEL or mean_rank_a == mean_rank_b:
        symbol = "="
    else:
        a_better = (mean_rank_a > mean_rank_b) == larger_is_better
        symbol = "+" if a_better else "-"
    return ComparisonVerdict(symbol, float(p_value),
                             float(clean_a.mean()), float(clean_b.mean()),
                             float(np.median(clean_a)), float(np.median(clean_b)),
                             dropped_a, dropped_b)


def rank_sum_exact_p(sample_a, sample_b) -> float:
    """Exact two-sided permutation p-value of the rank-sum statistic.

    Enumerates every assignment of the pooled midranks to the first sample,
    so the combined size must stay small (at most 20). This is the oracle the
    normal approximation is validated against.
    """
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    n1, n2 = a.size, b.size
    n = n1 + n2
    if n1 == 0 or n2 == 0:
        raise ValueError("both samples must be non-empty")
    if n > 20:
        raise ValueError("exact enumeration is limited to 20 pooled observations")
    ranks = rankdata(np.concatenate([a, b]))
    observed = float(ranks[:n1].sum())
    mean_rank_sum = n1 * (n + 1) / 2.0
    # midranks are multiples of 1/2, so a tiny slack absorbs float noise
    deviation = abs(observed - mean_rank_sum) - 1e-9
    combos = np.array(list(itertools.combinations(range(n), n1)))
    sums = ranks[combos].sum(axis=1)
    return float(np.mean(np.abs(sums - mean_rank_sum) >= deviation))
