"""Tail asymptotics of Gaussian process maxima with a unique variance peak.

The library evaluates the exact first-order asymptotics of
P(max_{t in [-S, S]} X(t) > u) for centered Gaussian processes whose
variance attains its maximum only at one point, classifies which asymptotic
regime applies per side (stationary-like / Talagrand / transition),
estimates the required limit-process constants by Monte Carlo, and checks
everything against a ground-truth path simulator.
"""

from .asympt import (AsymptoticResult, ConstantsBundle, evaluate,
                     gaussian_tail, log_gaussian_tail, regvar_closed_form,
                     stationary_asymptotic, stationary_like_asymptotic,
                     talagrand_asymptotic, transition_asymptotic)
from .classify import (CaseLabel, InformativeInterval, classify,
                       informative_interval, variance_decay_limit)
from .errors import (BracketError, ClassificationError, ConfigurationError,
                     DomainError, GPExtremesError, NotPositiveDefiniteError,
                     SamplerError, SpecViolationError)
from .mc import (MCEstimate, ValidationRow, ValidationTable,
                 estimate_exceedance, path_maxima, sample_paths, validate,
                 wilson_interval)
from .pickands import (ConstantEstimate, LimitProcessSpec,
                       estimate_pickands_constant,
                       estimate_pickands_constant_T,
                       estimate_transition_constant, known_pickands_constant,
                       sample_limit_paths)
from .process import (AuditReport, CorrelationProfile, ProcessSpec,
                      VarianceProfile, audit_assumptions, eval_correlation,
                      eval_variance)
from .rearrange import (OccupationCDF, default_cut, informative_integral,
                        laplace_transform, monotone_rearrangement,
                        occupation_cdf, truncation_tail_bound)
from .regvar import (RegVarFunction, SlowlyVarying, correlation_scale,
                     debruijn_conjugate, generalized_inverse, index_probe)

__version__ = "0.1.0"
