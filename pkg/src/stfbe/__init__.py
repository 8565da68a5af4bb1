"""Stochastic time-fractional Burgers equations: operators, kernels, simulation and regularity."""

__version__ = "0.1.0"

from .exceptions import AdmissibilityError, DomainError, NumericalFailure
from .frac_calculus import (
    FractionalOrders,
    TimeSeries,
    caputo_derivative,
    chain_inequality_residual,
    gronwall_bound,
    rl_derivative,
    rl_integral,
)
from .mittag_leffler import MlParams, ml, ml_heat_symbol, mittag_leffler
from .kernels import KernelQuery, check_decay, check_scaling, p_realspace, q_realspace, q_symbol
from .noise import GridSpec, NoiseRealization, covariance_check, sample_noise
from .solver import (
    CoefficientSet,
    Field,
    SigmaSpec,
    SolutionPath,
    StochasticBurgersSolver,
    rho_cutoff,
    solve_stfbe,
    t1_apply,
    t2_apply,
    t3_apply,
)
from .regularity import (
    HolderEstimate,
    HolderExponentEstimator,
    estimate_holder_space,
    estimate_holder_time,
    regime_scan,
    theoretical_exponents,
)
