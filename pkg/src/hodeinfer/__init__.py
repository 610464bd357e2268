"""Parameter inference for regression functions that solve a higher-order ODE.

Three Bayesian constructions (Runge-Kutta sieve Bayes, Runge-Kutta two-step
Bayes, binding-function two-step Bayes) plus a nonlinear least-squares
baseline, all built on a q-th order Runge-Kutta solver.
"""
from .errors import (
    DivergedTrajectoryError,
    DomainError,
    HodeError,
    OptimizationError,
    OutOfBoxError,
    RankDeficiencyError,
    SingularDesignError,
    StudyError,
    UnsupportedDerivativeError,
)
from .models import (
    OdeSystem,
    get_model,
    make_glucose,
    make_harmonic_oscillator,
    make_linear_null,
    make_van_der_pol,
)
from .nls import NlsFit, fit_nls
from .numerics import QuadratureRule, gauss_legendre, minimize_box, sample_inverse_gamma, sample_normal
from .rk import (
    GridSolution,
    eval_dense,
    gamma_coefficients,
    observed_order,
    predict,
    predict_many,
    rk_step,
    sensitivity,
    solve,
)
from .rksb import PosteriorDraws, RksbConfig, equal_tailed_interval, log_approx_likelihood, run_rksb
from .rktb import projection_objective, run_rktb
from .simulation import (
    AsymptoticBenchmark,
    CoverageReport,
    SimConfig,
    asymptotic_benchmark,
    generate_dataset,
    preset,
    run_study,
)
from .splines import (
    SplineBasis,
    SplinePosterior,
    basis_eval,
    design_matrix,
    fit_posterior,
    sample_beta,
    sample_sigma2,
)
from .ts import run_ts, ts_objective

__version__ = "0.1.0"
