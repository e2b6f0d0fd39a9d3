"""Desk-scale homogenization of oscillating stochastic reaction-diffusion
problems with almost-periodic coefficients: exact trig-polynomial algebra,
space-time cell solves, effective-model assembly, shared-noise simulation of
the oscillating and limit equations, and convergence diagnostics."""

__version__ = "0.1.0"

from .cell import (CellSolution, CoefficientField, GalerkinCellSolver,
                   cell_residual, grid_cell_oracle, solve_cell, solve_chi,
                   solve_w1)
from .effective import (EffectiveModel, NoiseChannel, NoiseTerm,
                        effective_functionals, effective_noise,
                        homogenized_tensor, tabulate)
from .errors import (ApshomError, AssumptionViolation, Blowup,
                     MismatchedModule, NoConvergence, SingularSystem,
                     StiffnessRejected, TruncationOverflow,
                     ZeroSpatialFrequency)
from .problem import InitialData, InitialTerm, ProblemSpec, validate_assumptions
from .profiles import ScalarProfile
from .reaction import (CorrectorG, ReactionTerm, SmoothField, build_G,
                       reaction_identity_check, solve_poisson)
from .spde import (DomainSpec, Trajectory, WienerPath, energy_diagnostics,
                   l2_qt_distance, simulate_eps, simulate_homogenized,
                   time_increment_diagnostic, time_increment_profile)
from .trig import (Frequency, FrequencyModule, TrigPoly, besicovitch_norm,
                   differentiate, empirical_mean, mean_of_product,
                   mean_of_triple, mean_value, rebase, spatial_mean, tp_eval,
                   tp_mul)
from .twoscale import (GridField, TestFunction, corrector_identification,
                       fit_loglog_slope, product_pairing, sigma_limit_pairing,
                       strong_sigma_check, synthetic_field, trajectory_field,
                       weak_sigma_pairing)
