"""Mild solutions by Picard iteration, weight selection and certification."""

from .kfun import kernel_integral, kfun, solver_kfun_exponents
from .picard import (RhoChoice, SolveDiagnostics, choose_rho, solve_mild, vbeta_norms,
                     weighted_distance)
from .problem import MildProblem, fixed_point_map, semigroup_orbit
from .certify import (BoundReport, Calibration, EnvelopeReport, RegularityReport, calibrate,
                      cocycle_defect, contraction_certify, derivative_envelope_check,
                      initial_data_lipschitz, initial_value_constant, random_holder_paths,
                      regularity_report, self_map_check, solution_at)
from .instances import (STANDARD_PARAMS, Instance, additive_noise, driver, multimode,
                        rough_initial, scalar_linear)
