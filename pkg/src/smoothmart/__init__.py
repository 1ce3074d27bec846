"""Conditional expectations of smooth Wiener functionals.

Functionals are polynomials times exponentials of quadratics in Gaussian
integrals ``int f dW`` with piecewise-polynomial kernels.  Conditional
expectations come from the backward Taylor expansion, the Dyson series, a
Monte Carlo estimator or an exact Gaussian-moment oracle.
"""
from .errors import (
    AnalysisError,
    ConfigError,
    DomainError,
    NumericOverflowError,
    ResourceError,
    SmoothMartError,
    UnsupportedFunctionalError,
    UsageError,
)
from .kernels import PathPrefix, PiecewisePolynomial, pp_evaluate, pp_integrate
from .functional import (
    Quadratic,
    WienerFunctional,
    brownian,
    constant,
    evaluate_full_path,
    exp_quadratic,
    freeze_evaluate,
    from_text,
    gaussian_integral,
    malliavin_at_time,
    malliavin_derivative,
    malliavin_power,
    to_text,
)
from .bte import BteConfig, backward_sweep, bte_step, gamma_coefficient, gamma_evaluate, truncation_bound
from .dyson import dyson_evaluate, dyson_term, ppde_evaluate, vertical_derivative_check
from .oracle import McConfig, McEstimate, gaussian_moment_expectation, mc_conditional_expectation
from .builtins import closed_form, example1, example2, exp_brownian, monomial
from .rng import BACKEND as RNG_BACKEND

__version__ = "0.1.0"
