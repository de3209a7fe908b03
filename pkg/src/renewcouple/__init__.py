"""Successful coupling of backward renewal processes and its convergence-rate bounds.

The package simulates delayed renewal processes, couples two of them through
the common part of their remaining-life laws, evaluates the constants of the
polynomial total-variation bound ``2 K(alpha, b1) / t^alpha`` and checks all
of it by Monte Carlo.
"""
from .bounds import (
    BoundConfigError,
    BoundSet,
    bound_set,
    kappa_R,
    lorden_theta,
    optimize_R,
    series_constants,
    stationary_averaged_K,
    tau_moment_bound,
    tv_bound_curve,
)
from .chain import CouplingConfig, CouplingConfigError, CouplingRun, TauSample, run_coupling, sample_tau
from .estimators import (
    TVCurveEstimate,
    lorden_check,
    tv_binned,
    tv_binned_curve,
    tv_coupling_tail,
)
from .laws import (
    DistSpecError,
    DomainError,
    Exponential,
    Gamma,
    InfiniteMomentError,
    LifetimeLaw,
    Mixture,
    Pareto,
    ResidualLaw,
    StationaryBackwardLaw,
    Uniform,
    UnsupportedAgeError,
    Weibull,
    cdf,
    common_part,
    inverse_cdf,
    moment,
    parse_law,
    residual,
    stationary_backward,
)
from .lemma import CommonDecomposition, CoupledPair, NoOverlapError, decompose, sample_coupled
from .renewal import (
    RecurrenceReadout,
    RenewalPath,
    estimate_forward_mean,
    generate_path,
    readout,
    simulate_recurrence,
)

__version__ = "0.1.0"
