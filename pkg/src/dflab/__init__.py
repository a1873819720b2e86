"""dflab: finite-window lab for non-local quadratic forms on weighted graphs."""

__version__ = "0.1.0"

from .graphs import (GraphForm, ModelSpec, build_model, degree_measure,
                     dump_graph, parse_graph, validate)
from .energy import (CapacityResult, EnergyMeasure, GammaMatrix, capacity,
                     contraction_check, energy, energy_measure, gamma_integral,
                     gamma_matrix, generator_apply, generator_matrix,
                     leibniz_residual)
from .metrics import (EdgeBudgetSet, IntrinsicWitness, PseudoMetric, annulus,
                      ball, budget_metric, budgets_m1, budgets_m2, build_metric,
                      cutoff, cutoff_energy_bounds, definitional_check,
                      dist_to_set, dump_metric, graph_distance,
                      intrinsic_rowsum_check, jump_moment_check, jump_size,
                      jump_size_trend, lipschitz_sample, max_combine,
                      parse_metric, roundtrip_check, rowsum_scale,
                      scaled_euclidean, three_point_metrics)
from .spectral import (EigenCandidate, PerturbedForm, ShellDecomposition,
                       allegretto_piepenbrink, caccioppoli,
                       caccioppoli_constant, form_bound_check,
                       gen_eigen_residual, gst_check, hyperbolic_wave, min_cq,
                       plane_wave, ratio_shell_geometry, shell_criterion,
                       shnol_bound, shnol_ratio, spectrum, spectrum_distance)
