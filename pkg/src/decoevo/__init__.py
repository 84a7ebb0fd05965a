"""Constrained multi-objective differential evolution with an
infeasible-solution archive, plus metrics and a benchmark harness."""

from .algorithm import AlgorithmState, RunConfig, RunRecord, initialize, run, step
from .coevolution import (NormalizationFrame, angle_diversity, angle_diversity_table,
                          normalize_reversed, normalize_standard, objective_frame,
                          restricted_mating, select_infeasible_nondominated,
                          update_archive, vector_angle)
from .harness import (ComparisonReport, ConfigError, ExperimentConfig,
                      IncompleteCellError, compare, export_front, parse_config,
                      read_record, run_experiment, write_record)
from .metrics import (ComparisonVerdict, MetricResult, dominated_volume,
                      feasible_ratio, final_front, hv_result, hypervolume, igd,
                      igd_result, rank_sum_exact_p, wilcoxon_rank_sum)
from .model import (EvalCounter, Individual, ProblemDefinition, augmented_objectives,
                    clip_to_bounds, constraint_violation_component, evaluate,
                    total_cv, violation_components)
from .problems import (MetricUnavailableError, UnknownProblemError, get_problem,
                       list_problems, reference_front, register_problem)
from .ranking import (cdp_dominates, crowding_distance, environmental_selection,
                      fast_nondominated_sort, objective_dominates, pareto_dominates)
from .variation import (VariationParams, binomial_crossover, de_mutation,
                        generate_offspring, polynomial_mutation,
                        polynomial_mutation_delta)

__version__ = "0.1.0"
