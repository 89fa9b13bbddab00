"""Numerical toolkit for nice couples, induced maps and measures of polynomial dynamics."""
from .errors import (AmbiguityError, ConfigError, ConstructionError, ContainmentError, DegeneratePairError,
                     DomainViolationError, DynlabError, EscapeError, NicenessViolation, NoConvergenceError,
                     PreconditionError)
from .maps import (COMPLEX, REAL, CriticalPoint, MapSpec, chebyshev, complex_quadratic, differentiate, evaluate,
                   iterate_with_derivative, large_derivatives_report, make_map, map_from_config, orbit,
                   real_quadratic)
from .geometry import (IntervalPair, ModulusValue, cross_ratio, disk_modulus, interval_modulus,
                       koebe_distortion_check, mmod, modulus_from_cross_ratio)
from .pullback import (Ball, PullbackComponent, all_components, backward_contraction_probe, pull_interval,
                       shrinking_exponent, tB)
from .nice import (NiceCouple, NiceSet, construct_nice_couple, enumerate_children, lambda_nice_report,
                   landing_components, verify_niceness)
from .inducing import (badness_exponent_estimate, build_induced_map, enumerate_bad_pullbacks, tail_statistics,
                       verify_decomposition, xi_partial_sums)
from .measures import (AtomMeasure, conformal_measure, conformality_check, correlation_decay, invariant_density,
                       lp_regularity, measure_regularity, poincare_exponent, poincare_series,
                       pushforward_bound_probe)
from .dimension import box_dimension, hyperbolic_dimension_lb, julia_sample

__version__ = "0.1.0"
