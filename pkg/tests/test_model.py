import math

import numpy as np
import pytest

from decoevo.model import (EvalCounter, ProblemDefinition, augmented_objectives,
                           clip_to_bounds, constraint_violation_component, evaluate,
                           total_cv, violation_components)
from decoevo.problems import get_problem


def test_bnh_origin_evaluation():
    # hand evaluation: f1 = 0, f2 = 25 + 25 = 50; g1 = 25 - 25 = 0 (boundary),
    # g2 = 7.7 - 64 - 9 < 0, so the point is feasible
    ind = evaluate(get_problem("bnh"), [0.0, 0.0])
    assert ind.objectives == pytest.approx([0.0, 50.0])
    assert ind.cv == 0.0
    assert ind.feasible


def test_evaluation_on_bound_is_admissible():
    prob = get_problem("bnh")
    ind = evaluate(prob, [5.0, 3.0])
    assert np.all(np.isfinite(ind.objectives))


def test_eq_ring_on_manifold_is_feasible():
    ind = evaluate(get_problem("eq_ring"), [1.0, 0.0])
    assert ind.cv == 0.0


def test_violation_component_inequality_satisfied():
    assert constraint_violation_component(-1.0, 0, 1) == 0.0


def test_violation_component_equality_within_band():
    assert constraint_violation_component(5e-5, 0, 0, epsilon=1e-4) == 0.0


def test_violation_component_equality_outside_band():
    value = constraint_violation_component(2e-4, 0, 0, epsilon=1e-4)
    assert value == pytest.approx(1e-4, rel=1e-12)


def test_violation_components_vector_matches_scalar():
    raw = np.array([-0.5, 2.0, 1e-5, -3e-4])
    vector = violation_components(raw, n_ieq=2, epsilon=1e-4)
    scalar = [constraint_violation_component(r, i, 2, 1e-4) for i, r in enumerate(raw)]
    assert vector == pytest.approx(scalar)


@pytest.mark.parametrize("components, expected", [
    ((0.0, 0.0, 0.0), 0.0),
    ((2.0, 0.0), 2.0),
    ((1e-4, 3.0), 3.0001),
])
def test_total_cv(components, expected):
    assert total_cv(components) == pytest.approx(expected, rel=1e-12)


def test_total_cv_zero_iff_all_zero():
    rng = np.random.default_rng(0)
    for _ in range(50):
        comps = rng.uniform(0, 1, size=4) * (rng.random(4) < 0.5)
        assert (total_cv(comps) == 0.0) == bool(np.all(comps == 0.0))


def test_augmented_objectives(individual_factory):
    ind = individual_factory([1.0, 2.0], cv=0.5)
    assert augmented_objectives(ind) == pytest.approx([1.0, 2.0, 0.5])
    feasible = individual_factory([3.0, 4.0], cv=0.0)
    assert augmented_objectives(feasible)[-1] == 0.0
    three = individual_factory([1.0, 2.0, 3.0], cv=0.1)
    assert augmented_objectives(three).shape == (4,)


def test_clip_to_bounds_examples():
    prob = get_problem("bnh")  # bounds [0, 5] x [0, 3]
    assert clip_to_bounds([-1.0, 0.5], prob) == pytest.approx([0.0, 0.5])
    assert clip_to_bounds([0.5, 7.0], prob) == pytest.approx([0.5, 3.0])


def test_clip_to_bounds_idempotent():
    prob = get_problem("srn")
    rng = np.random.default_rng(1)
    for _ in range(100):
        x = rng.uniform(-50, 50, size=2)
        once = clip_to_bounds(x, prob)
        assert np.array_equal(clip_to_bounds(once, prob), once)


def test_cv_recomputation_invariant():
    # recompute the total violation from the stored raw constraints, exactly
    rng = np.random.default_rng(2)
    for name in ("bnh", "srn", "tnk", "eq_ring"):
        prob = get_problem(name)
        for _ in range(50):
            x = rng.uniform(prob.lower, prob.upper)
            ind = evaluate(prob, x)
            expected = total_cv(violation_components(ind.constraints, prob.n_ieq))
            assert ind.cv == expected
            if ind.cv == 0.0:
                ok = [constraint_violation_component(r, i, prob.n_ieq) == 0.0
                      for i, r in enumerate(ind.constraints)]
                assert all(ok)


def test_counter_increments_by_one():
    counter = EvalCounter()
    prob = get_problem("bnh")
    evaluate(prob, [1.0, 1.0], counter=counter)
    assert counter.used == 1
    evaluate(prob, [1.0, 1.0], counter=counter)
    assert counter.used == 2


def test_non_finite_output_flags_individual():
    def bad(x):
        return np.array([math.nan, 1.0]), np.array([0.0])

    prob = ProblemDefinition(name="bad", n_var=1, n_obj=2, n_ieq=1, n_con=1,
                             lower=np.zeros(1), upper=np.ones(1), evaluator=bad)
    ind = evaluate(prob, [0.5])
    assert ind.cv == math.inf
    assert not ind.feasible


def test_dimension_mismatch_raises():
    prob = get_problem("bnh")
    with pytest.raises(ValueError):
        evaluate(prob, [0.0, 0.0, 0.0])


def test_evaluator_shape_mismatch_raises():
    def wrong(x):
        return np.array([1.0, 2.0, 3.0]), np.array([0.0])

    prob = ProblemDefinition(name="wrong", n_var=1, n_obj=2, n_ieq=1, n_con=1,
                             lower=np.zeros(1), upper=np.ones(1), evaluator=wrong)
    with pytest.raises(ValueError):
        evaluate(prob, [0.5])


def test_problem_definition_invariants():
    def ok(x):
        return np.array([x[0], x[0]]), np.empty(0)

    with pytest.raises(ValueError):
        ProblemDefinition(name="m1", n_var=1, n_obj=1, n_ieq=0, n_con=0,
                          lower=np.zeros(1), upper=np.ones(1), evaluator=ok)
    with pytest.raises(ValueError):
        ProblemDefinition(name="b", n_var=1, n_obj=2, n_ieq=0, n_con=0,
                          lower=np.ones(1), upper=np.ones(1), evaluator=ok)
    with pytest.raises(ValueError):
        ProblemDefinition(name="c", n_var=1, n_obj=2, n_ieq=2, n_con=1,
                          lower=np.zeros(1), upper=np.ones(1), evaluator=ok)
