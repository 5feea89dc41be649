"""Threshold-aware accuracy analysis and pulse design for ML time-of-arrival estimation."""

from .special_math import DomainError, lambert_w_m1, q_approx, q_function, valley_fill
from .pulse_model import (AcrModel, EstimationSetup, IntervalSet, PulseSpec, build_acr,
                          load_preset, local_maxima)
from .mse_models import MseCurve, crlb, db_to_linear, ecrlb, max_mse, mse_ana, mse_ana_env, mse_num
from .lower_bounds import alb_b, alb_z
from .thresholds import (ThresholdSet, lambda_at_asymptotic_threshold, rho_am1_analytic,
                         rho_am2_analytic, rho_as_analytic, thresholds_analytic,
                         thresholds_numeric)
from .pulse_design import (DesignConstraints, DesignSolution, design_fixed_bandwidth,
                           design_free_bandwidth, exhaustive_search_reference,
                           feasible_geometry)
from .mc_oracle import McConfig, simulate_mle_mse

__version__ = "0.1.0"
