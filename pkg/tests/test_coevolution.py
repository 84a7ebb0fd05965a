import math

import numpy as np
import pytest

from decoevo.coevolution import (NormalizationFrame, angle_diversity,
                                 angle_diversity_table, normalize_reversed,
                                 normalize_standard, objective_frame,
                                 restricted_mating, select_infeasible_nondominated,
                                 update_archive, vector_angle)
from decoevo.coevolution import _angle_matrix
from decoevo.model import augmented_objectives
from decoevo.ranking import pareto_dominates

from conftest import make_individual


def unit_frame():
    return NormalizationFrame(np.zeros(2), np.ones(2))


def random_individuals(rng, size, infeasible_share=0.5):
    out = []
    for _ in range(size):
        cv = float(rng.uniform(0.01, 2.0)) if rng.random() < infeasible_share else 0.0
        out.append(make_individual(rng.uniform(0, 5, size=2), cv=cv))
    return out


# --- candidate selection ---------------------------------------------------

def test_all_feasible_union_gives_empty_candidates():
    pop = [make_individual([1, 2]), make_individual([2, 1])]
    assert select_infeasible_nondominated(pop, [], []) == []


def test_dominated_infeasible_is_filtered():
    better = make_individual([1, 1], cv=0.1)
    worse = make_individual([2, 2], cv=0.2)
    survivors = select_infeasible_nondominated([better, worse], [], [])
    assert survivors == [better]


def test_violation_tradeoff_keeps_both():
    low_cv = make_individual([5, 5], cv=0.1)
    good_obj = make_individual([1, 1], cv=0.9)
    survivors = select_infeasible_nondominated([low_cv, good_obj], [], [])
    assert set(map(id, survivors)) == {id(low_cv), id(good_obj)}


def test_candidates_match_bruteforce_on_random_unions():
    rng = np.random.default_rng(31)
    for _ in range(30):
        pop = random_individuals(rng, 8)
        arc = random_individuals(rng, 4, infeasible_share=1.0)
        off = random_individuals(rng, 8)
        union = pop + arc + off
        survivors = select_infeasible_nondominated(pop, arc, off)
        expected = [u for u in union
                    if u.cv > 0 and not any(
                        pareto_dominates(augmented_objectives(v), augmented_objectives(u))
                        for v in union)]
        assert [id(s) for s in survivors] == [id(e) for e in expected]


# --- normalization ----------------------------------------------------------

def test_normalize_reversed_endpoints():
    frame = NormalizationFrame(np.array([1.0, 0.0]), np.array([3.0, 2.0]))
    at_min = make_individual([1.0, 0.0])
    at_max = make_individual([3.0, 2.0])
    assert normalize_reversed(at_min, frame) == pytest.approx([1.0, 1.0])
    assert normalize_reversed(at_max, frame) == pytest.approx([0.0, 0.0])


def test_normalize_degenerate_dimension_is_zero():
    frame = NormalizationFrame(np.array([2.0, 0.0]), np.array([2.0, 1.0]))
    ind = make_individual([2.0, 0.5])
    assert normalize_reversed(ind, frame)[0] == 0.0
    assert normalize_standard(ind, frame)[0] == 0.0


def test_normalize_standard_endpoints_and_midpoint():
    frame = NormalizationFrame(np.array([0.0, 0.0]), np.array([4.0, 2.0]))
    assert normalize_standard(make_individual([0.0, 0.0]), frame) == pytest.approx([0, 0])
    assert normalize_standard(make_individual([4.0, 2.0]), frame) == pytest.approx([1, 1])
    assert normalize_standard(make_individual([2.0, 1.0]), frame) == pytest.approx([0.5, 0.5])


def test_objective_frame_spans_extremes():
    pop = [make_individual([0, 5]), make_individual([3, 1]), make_individual([2, 2])]
    frame = objective_frame(pop)
    assert frame.z_min == pytest.approx([0, 1])
    assert frame.z_max == pytest.approx([3, 5])


# --- vector angles -----------------------------------------------------------

def test_vector_angle_known_cases():
    assert vector_angle([1, 0], [0, 1]) == pytest.approx(math.pi / 2)
    assert vector_angle([1, 1], [2, 2]) == pytest.approx(0.0)
    assert vector_angle([1, 0], [-1, 0]) == pytest.approx(0.0)  # folded


def test_vector_angle_zero_norm_is_parallel():
    assert vector_angle([0, 0], [1, 2]) == 0.0


def test_vector_angle_properties():
    rng = np.random.default_rng(37)
    for _ in range(300):
        m = int(rng.integers(2, 5))
        a = rng.normal(size=m)
        b = rng.normal(size=m)
        angle = vector_angle(a, b)
        assert 0.0 <= angle <= math.pi / 2
        assert abs(angle - vector_angle(b, a)) <= 1e-12
        scale = float(rng.uniform(0.1, 50))
        assert abs(angle - vector_angle(scale * a, b)) <= 1e-9
        assert vector_angle(a, -a) == pytest.approx(0.0)


def test_angle_matrix_matches_scalar():
    rng = np.random.default_rng(41)
    vectors = rng.random((7, 3))
    vectors[2] = 0.0  # a degenerate row
    matrix = _angle_matrix(vectors)
    for i in range(7):
        for j in range(7):
            assert matrix[i, j] == pytest.approx(vector_angle(vectors[i], vectors[j]),
                                                 abs=1e-12)


# --- archive update -----------------------------------------------------------

def test_update_archive_under_capacity_is_identity():
    infeasible = [make_individual([1, 2], cv=0.3), make_individual([2, 1], cv=0.4)]
    out = update_archive(infeasible, [], [], capacity=5)
    assert set(map(id, out)) == set(map(id, infeasible))


def test_update_archive_drops_higher_violation_of_closest_pair():
    # normalized (reversed) vectors: a -> (1, 0), b -> (0.9, 0.1), c -> (0, 1);
    # the closest pair is (a, b) and b carries the larger violation
    a = make_individual([0.0, 10.0], cv=0.2)
    b = make_individual([1.0, 9.0], cv=0.5)
    c = make_individual([10.0, 0.0], cv=0.3)
    out = update_archive([a, b, c], [], [], capacity=2)
    assert set(map(id, out)) == {id(a), id(c)}


def test_update_archive_tie_drops_second_of_pair():
    a = make_individual([0.0, 10.0], cv=0.3)
    b = make_individual([1.0, 9.0], cv=0.3)  # same violation as a
    c = make_individual([10.0, 0.0], cv=0.3)
    out = update_archive([a, b, c], [], [], capacity=2)
    assert set(map(id, out)) == {id(a), id(c)}


def test_update_archive_invariants_on_random_unions():
    rng = np.random.default_rng(43)
    for _ in range(25):
        pop = random_individuals(rng, 10)
        arc = random_individuals(rng, 5, infeasible_share=1.0)
        off = random_individuals(rng, 10)
        capacity = 4
        candidates = select_infeasible_nondominated(pop, arc, off)
        out = update_archive(pop, arc, off, capacity)
        assert len(out) == min(len(candidates), capacity)
        assert all(ind.cv > 0 for ind in out)
        for u in out:
            for v in out:
                if u is not v:
                    assert not pareto_dominates(augmented_objectives(u),
                                                augmented_objectives(v))


# --- angle diversity ----------------------------------------------------------

def _member_at_angle(theta):
    return make_individual([math.sin(theta), math.cos(theta)])


def test_angle_diversity_kth_smallest():
    me = _member_at_angle(0.0)
    near = _member_at_angle(0.1)
    far = _member_at_angle(0.3)
    pop = [me, near, far]
    # capacity 1 -> k = 1; capacity 4 -> k = 2
    assert angle_diversity(me, pop, unit_frame(), capacity=1) == pytest.approx(0.1)
    assert angle_diversity(me, pop, unit_frame(), capacity=4) == pytest.approx(0.3)


def test_angle_diversity_duplicate_gives_zero():
    me = _member_at_angle(0.2)
    twin = _member_at_angle(0.2)
    other = _member_at_angle(1.0)
    assert angle_diversity(me, [me, twin, other], unit_frame(), capacity=1) == 0.0


def test_angle_diversity_singleton_is_maximal():
    me = _member_at_angle(0.4)
    assert angle_diversity(me, [me], unit_frame(), capacity=100) == math.pi / 2


def test_angle_diversity_k_clamped_to_population():
    me = _member_at_angle(0.0)
    other = _member_at_angle(0.5)
    # k would be 10 for capacity 100, but only one peer exists
    assert angle_diversity(me, [me, other], unit_frame(), capacity=100) == pytest.approx(0.5)


def test_adding_duplicate_never_increases_diversity():
    rng = np.random.default_rng(47)
    for _ in range(20):
        pop = [make_individual(rng.uniform(0.1, 1.0, size=2)) for _ in range(6)]
        frame = objective_frame(pop)
        me = pop[0]
        before = angle_diversity(me, pop, frame, capacity=9)
        twin = make_individual(me.objectives.copy())
        after = angle_diversity(me, pop + [twin], frame, capacity=9)
        assert after <= before + 1e-12


def test_angle_diversity_table_matches_scalar():
    rng = np.random.default_rng(53)
    pop = [make_individual(rng.uniform(0, 3, size=2)) for _ in range(9)]
    arc = [make_individual(rng.uniform(0, 3, size=2), cv=0.5) for _ in range(4)]
    capacity = 9
    ad_pop, ad_arc = angle_diversity_table(pop, arc, capacity)
    frame = objective_frame(pop + arc)
    for i, member in enumerate(pop):
        assert ad_pop[i] == pytest.approx(
            angle_diversity(member, pop, frame, capacity), abs=1e-12)
    for i, member in enumerate(arc):
        assert ad_arc[i] == pytest.approx(
            angle_diversity(member, arc, frame, capacity), abs=1e-12)


# --- restricted mating ----------------------------------------------------------

def test_mating_with_small_archive_draws_from_joint_population():
    rng = np.random.default_rng(59)
    pop = [make_individual([i, i], cv=0.0) for i in range(5)]
    p1, p2 = restricted_mating(pop, [], capacity=5, rng=rng)
    assert p1 in pop and p2 in pop
    assert p1 is not p2  # distinct when possible


def test_mating_violation_tournament_prefers_lower_cv():
    rng = np.random.default_rng(61)
    pop = [make_individual([1, 1], cv=0.0)]
    arc = [make_individual([2, 2], cv=0.5)]
    p1, _ = restricted_mating(pop, arc, capacity=1, rng=rng,
                              ad_main=np.array([0.1]), ad_archive=np.array([0.1]))
    assert p1 is pop[0]


def test_mating_diversity_tournament_prefers_larger_ad():
    rng = np.random.default_rng(67)
    pop = [make_individual([1, 1], cv=0.0)]
    arc = [make_individual([2, 2], cv=0.5)]
    _, p2 = restricted_mating(pop, arc, capacity=1, rng=rng,
                              ad_main=np.array([0.2]), ad_archive=np.array([0.4]))
    assert p2 is arc[0]


def test_mating_ties_keep_population_draws():
    rng = np.random.default_rng(71)
    pop = [make_individual([1, 1], cv=0.5)]
    arc = [make_individual([2, 2], cv=0.5)]
    p1, p2 = restricted_mating(pop, arc, capacity=1, rng=rng,
                               ad_main=np.array([0.3]), ad_archive=np.array([0.3]))
    assert p1 is pop[0]
    assert p2 is pop[0]


def test_mating_full_archive_requires_tables():
    rng = np.random.default_rng(73)
    pop = [make_individual([1, 1])]
    arc = [make_individual([2, 2], cv=0.1)]
    with pytest.raises(ValueError):
        restricted_mating(pop, arc, capacity=1, rng=rng)


def test_mating_first_parent_never_strictly_worse():
    rng = np.random.default_rng(79)
    pop = [make_individual(rng.uniform(0, 3, 2), cv=float(rng.uniform(0, 1)))
           for _ in range(6)]
    arc = [make_individual(rng.uniform(0, 3, 2), cv=float(rng.uniform(0.01, 1)))
           for _ in range(6)]
    ad_pop, ad_arc = angle_diversity_table(pop, arc, 6)
    for _ in range(100):
        p1, _ = restricted_mating(pop, arc, capacity=6, rng=rng,
                                  ad_main=ad_pop, ad_archive=ad_arc)
        assert p1.cv <= max(ind.cv for ind in pop + arc)
