"""Decay of a discrete level into an equidistant quasi-continuum.

First-order transition probabilities, the exact interval-by-interval
survival amplitude, a brute-force propagator used as reference, and the
analyses that extract kinks, rates and breakdown tables from them.
"""

__version__ = "0.1.0"

from .errors import AnalysisError, DomainError, GoldenRuleError, NumericalError, ParameterError
from .params import (
    DimensionlessTime,
    ModelParams,
    derive_params,
    heisenberg_grid,
    interval_index,
    to_dimensionless,
    to_physical,
)
from .first_order import (
    SpectrumSpec,
    ValidityWindow,
    golden_rule_rate,
    ideal_spectrum,
    p_first_order_generic,
    p_first_order_integral,
    p_ideal_first_order,
    validity_window,
    w_alpha,
    w_alpha_direct,
)
from .exact import (
    AmplitudeSeries,
    IntervalTerm,
    interval_terms,
    survival_amplitude,
    survival_probability,
    survival_probability_series,
)
from .propagator import PropagatorState, build, convergence_study, propagate
from .analysis import KinkReport, RateFit, breakdown_scan, detect_kinks, fit_rate, order_scaling

__all__ = [
    "AnalysisError",
    "DomainError",
    "GoldenRuleError",
    "NumericalError",
    "ParameterError",
    "DimensionlessTime",
    "ModelParams",
    "derive_params",
    "heisenberg_grid",
    "interval_index",
    "to_dimensionless",
    "to_physical",
    "SpectrumSpec",
    "ValidityWindow",
    "golden_rule_rate",
    "ideal_spectrum",
    "p_first_order_generic",
    "p_first_order_integral",
    "p_ideal_first_order",
    "validity_window",
    "w_alpha",
    "w_alpha_direct",
    "AmplitudeSeries",
    "IntervalTerm",
    "interval_terms",
    "survival_amplitude",
    "survival_probability",
    "survival_probability_series",
    "PropagatorState",
    "build",
    "convergence_study",
    "propagate",
    "KinkReport",
    "RateFit",
    "breakdown_scan",
    "detect_kinks",
    "fit_rate",
    "order_scaling",
]
