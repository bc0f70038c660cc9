"""Weighted fractional maximal operators on the upper half-plane."""
from .constants import (ConstantReport, NonIntegrable, bekolle_bonami, bekolle_infinity, box_mass_sequence,
                        carleson_sequence_constant, class_constant, sawyer_testing)
from .fields import (BorelMeasure, QuadratureSpec, ScalarField, box_indicator, box_sum, constant, half_disk,
                     integrate_box, integrate_rect, lp_norm, power_abs, power_y, product, total_integral)
from .geometry import SHIFTS, DyadicInterval, Interval, ScaleWindow, containing_dyadic
from .operators import (Params, bergman_positive, bracket_points, dyadic_fractional_maximal,
                        dyadic_positive_operator, fractional_averages, stopping_intervals, superlevel_measure)
from .orlicz import YoungFunction, check_Bp, complementary, luxembourg_norm
from .verify import Scenario, VerificationResult, run_scenario, sharpness_sweep

__version__ = "0.1.0"
