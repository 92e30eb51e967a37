"""Unit-lag autocovariance of random-walk Metropolis-Hastings chains.

The package computes the closed-form lag-1 autocovariance of stationary
Metropolis-Hastings chains by adaptive quadrature, solves the optimal
(two-point / narrow-bimodal) proposal-design problem, connects both to
the high-dimensional 2.38/sqrt(mbar) step-size rule, and verifies every
formula against seeded Monte Carlo runs.
"""

from .densities import (
    Family,
    TargetDensity,
    custom_tabulated,
    gaussian,
    ghs,
    logistic,
    parse_target_spec,
)
from .design import (
    DesignResult,
    covariance_at_design,
    design_functional,
    solve_design,
    w_eval,
)
from .diagnostics import EssMethod, EssReport, Statistic, autocorr, batch_se, ess
from .errors import (
    AtomicMeasureError,
    ConsistencyError,
    ContractError,
    DegenerateChainError,
    DesignError,
    InvalidStateError,
    InvariantViolationError,
    MhcovError,
    NumericError,
    ParameterError,
)
from .highdim import (
    ProductTarget,
    ScalingReport,
    efficiency,
    optimize_ell,
    predicted_acceptance,
    roughness,
    run_highdim,
)
from .proposals import (
    FlipGaussianKernel,
    GridSpec,
    IncrementDensity,
    IncrementKind,
    ProposalKernel,
    RandomWalkKernel,
    bimodal_rw,
    gaussian_rw,
    parse_kernel_spec,
    two_point,
)
from .quadrature import QuadratureSpec, Scheme, adaptive_gk, composite_simpson, integrate
from .sampler import (
    Chain,
    FixedPoint,
    FromTarget,
    RunConfig,
    acceptance_prob,
    derive_rng,
    mean_acceptance,
    read_chain_binary,
    replicate_chains,
    run_chain,
    write_chain_binary,
    write_chain_csv,
)
from .theory import (
    CovReport,
    Formula,
    PositivityReport,
    cov_explicit1d,
    cov_general,
    cov_symrw,
    empirical_lag_cov,
    positivity_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "AtomicMeasureError",
    "Chain",
    "ConsistencyError",
    "ContractError",
    "CovReport",
    "DegenerateChainError",
    "DesignError",
    "DesignResult",
    "EssMethod",
    "EssReport",
    "Family",
    "FixedPoint",
    "FlipGaussianKernel",
    "FromTarget",
    "GridSpec",
    "IncrementDensity",
    "IncrementKind",
    "InvalidStateError",
    "InvariantViolationError",
    "MhcovError",
    "NumericError",
    "ParameterError",
    "ProductTarget",
    "ProposalKernel",
    "QuadratureSpec",
    "RandomWalkKernel",
    "RunConfig",
    "ScalingReport",
    "Scheme",
    "Statistic",
    "TargetDensity",
    "acceptance_prob",
    "adaptive_gk",
    "autocorr",
    "batch_se",
    "bimodal_rw",
    "composite_simpson",
    "cov_explicit1d",
    "cov_general",
    "cov_symrw",
    "covariance_at_design",
    "custom_tabulated",
    "derive_rng",
    "design_functional",
    "efficiency",
    "empirical_lag_cov",
    "ess",
    "gaussian",
    "gaussian_rw",
    "ghs",
    "integrate",
    "logistic",
    "mean_acceptance",
    "optimize_ell",
    "parse_kernel_spec",
    "parse_target_spec",
    "positivity_sweep",
    "predicted_acceptance",
    "read_chain_binary",
    "replicate_chains",
    "roughness",
    "run_chain",
    "run_highdim",
    "solve_design",
    "two_point",
    "w_eval",
    "write_chain_binary",
    "write_chain_csv",
]
