"""Quadrature evaluation of the unit-lag covariance formulas.

Three independent routes to Cov(X_t, X_{t+1}) for a stationary chain:

* ``cov_general``  - sigma^2 - 1/2 * double integral of
  (x - y)^2 pi(x) q(y|x) alpha(x, y); valid for any proposal with a
  density, including the sign-flipping counterexample kernel.
* ``cov_symrw``    - sigma^2 - 1/2 * double integral of
  (x - y)^2 phi(y - x) min(pi(x), pi(y)); valid for symmetric
  random-walk proposals.
* ``cov_explicit1d`` - the one-dimensional reduction
  4 * int_0^inf x [1 - Pi_mu(x)] [1 - 4 x phi(2x)] dx for symmetric
  unimodal targets, with the atomic two-point proposal handled in closed
  form.

The routes are deliberately kept independent (different integrands,
different dimensionality) so their agreement is a real check of the
underlying identities, not a tautology.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .densities import TargetDensity
from .errors import ContractError, NumericError
from .proposals import (
    FlipGaussianKernel,
    IncrementDensity,
    IncrementKind,
    ProposalKernel,
    RandomWalkKernel,
)
from .quadrature import QuadratureSpec, adaptive_gk, exp_tail_bound, integrate
from .sampler import Chain, acceptance_prob


class Formula(enum.Enum):
    """Which covariance representation produced a value."""

    GENERAL_2D = "general-2d"
    SYMRW_2D = "symrw-2d"
    EXPLICIT_1D = "explicit-1d"


@dataclass(frozen=True)
class CovReport:
    """A covariance value with its provenance and error estimate."""

    value: float
    formula: Formula
    est_error: float
    spec: QuadratureSpec


@dataclass(frozen=True)
class PositivityReport:
    """Result of sweeping cov_explicit1d over a target/increment grid."""

    n_pairs: int
    all_positive: bool
    min_value: float | None
    argmin_target_id: str | None
    argmin_kernel_id: str | None


def _resolve_spec(target: TargetDensity, spec: QuadratureSpec | None) -> QuadratureSpec:
    if spec is None:
        spec = QuadratureSpec()
    if spec.truncation is None:
        spec = spec.with_truncation(target.truncation_radius())
    return spec


def _check_converged(value: float, est_error: float, spec: QuadratureSpec) -> None:
    if est_error > max(spec.abs_tol, spec.rel_tol * abs(value)):
        raise NumericError(
            f"covariance quadrature error estimate {est_error:.3e} exceeds tolerance",
            achieved_tol=est_error,
        )


def _increment_breakpoints(inc: IncrementDensity, *, halved: bool) -> tuple[float, ...]:
    """Abscissas where phi(.) (or phi(2 .) when halved) concentrates."""
    pts: list[float] = list(inc.feature_points())
    if inc.kind is IncrementKind.GAUSSIAN_RW:
        pts += [inc.sigma_q, 6.0 * inc.sigma_q]
    if halved:
        pts = [0.5 * p for p in pts]
    return tuple(p for p in pts if p > 0.0)


def _iterated_2d(
    outer_lo: float,
    outer_hi: float,
    inner_bounds,
    inner_integrand,
    inner_breaks,
    spec: QuadratureSpec,
) -> tuple[float, float]:
    """Iterated 1-D adaptive quadrature of a 2-D integrand.

    ``inner_integrand(x, ys)`` is vectorized in ``ys``; the inner integral
    runs at a tolerance tightened by both the usual factor 10 and the outer
    width, so accumulated inner error stays below a tenth of the budget.
    """
    width = outer_hi - outer_lo
    # Both tolerances shrink with the outer width: the error report charges
    # the worst inner error across the whole outer interval, so a relative
    # floor that ignored the width would dominate the budget on wide domains.
    inner_spec = QuadratureSpec(
        abs_tol=spec.abs_tol / (10.0 * max(1.0, width)),
        rel_tol=spec.rel_tol / (10.0 * max(1.0, width)),
        max_subdivisions=spec.max_subdivisions,
    )
    worst_inner = 0.0

    def outer_f(xs: np.ndarray) -> np.ndarray:
        nonlocal worst_inner
        out = np.empty_like(xs)
        for i, x in enumerate(np.asarray(xs, dtype=float)):
            lo, hi = inner_bounds(x)
            val, err = adaptive_gk(
                lambda ys: inner_integrand(x, ys),
                lo,
                hi,
                abs_tol=inner_spec.abs_tol,
                rel_tol=inner_spec.rel_tol,
                max_subdivisions=inner_spec.max_subdivisions,
                breakpoints=inner_breaks(x),
            )
            worst_inner = max(worst_inner, err)
            out[i] = val
        return out

    value, outer_err = integrate(outer_f, outer_lo, outer_hi, spec)
    return value, outer_err + worst_inner * width


def cov_general(
    target: TargetDensity, kernel: ProposalKernel, spec: QuadratureSpec | None = None
) -> CovReport:
    """Unit-lag covariance from the general 2-D formula.

    Works for any kernel with a density.  The acceptance probability is
    evaluated by the sampler's own ``acceptance_prob``, so this route
    exercises exactly the arithmetic the chain engine uses.
    """
    if isinstance(kernel, RandomWalkKernel) and not kernel.increment.is_density:
        raise ContractError(
            "the general 2-D formula needs a proposal density; "
            "use cov_explicit1d for the atomic two-point proposal"
        )
    spec = _resolve_spec(target, spec)
    T = spec.truncation
    mu = target.mu
    sigma2 = target.variance()

    if isinstance(kernel, RandomWalkKernel):
        inc = kernel.increment
        feats = _increment_breakpoints(inc, halved=False)
        m2q = inc.second_moment()

        def inner_bounds(x):
            qlo, qhi = kernel.y_window(x)
            return min(mu - T, qlo), max(mu + T, qhi)

        def inner_breaks(x):
            # acceptance kinks at pi(y) = pi(x); proposal features at x +- f
            pts = [x, 2.0 * mu - x]
            for f in feats:
                pts += [x - f, x + f]
            return pts

    else:
        m2q = kernel.var + (1.0 + kernel.c) ** 2 * (abs(mu) + T) ** 2

        def inner_bounds(x):
            qlo, qhi = kernel.y_window(x)
            return min(mu - T, qlo), max(mu + T, qhi)

        def inner_breaks(x):
            return [x, 2.0 * mu - x, -kernel.c * x]

    def inner_integrand(x, ys):
        px = float(target.pdf(x))
        if px <= 0.0:
            return np.zeros_like(ys)
        d = x - ys
        return d * d * px * kernel.density(x, ys) * acceptance_prob(target, kernel, x, ys)

    raw, err = _iterated_2d(
        mu - T, mu + T, inner_bounds, inner_integrand, inner_breaks, spec
    )
    pdf_up = lambda t: float(target.pdf(mu + t))
    pdf_dn = lambda t: float(target.pdf(mu - t))
    trunc = (exp_tail_bound(pdf_up, T, 2) + exp_tail_bound(pdf_dn, T, 2)) * (2.0 + 2.0 * m2q)
    est_error = err + trunc
    _check_converged(raw, est_error, spec)
    return CovReport(sigma2 - 0.5 * raw, Formula.GENERAL_2D, est_error, spec)


def cov_symrw(
    target: TargetDensity, inc: IncrementDensity, spec: QuadratureSpec | None = None
) -> CovReport:
    """Unit-lag covariance from the symmetric random-walk min-form.

    sigma^2 - 1/2 * integral over (x, z) of z^2 phi(z) min(pi(x), pi(x+z)).
    """
    if not inc.is_density:
        raise ContractError("the min-form needs a proposal density, not an atomic measure")
    spec = _resolve_spec(target, spec)
    T = spec.truncation
    mu = target.mu
    sigma2 = target.variance()
    R = inc.support_radius()
    feats = _increment_breakpoints(inc, halved=False)

    def inner_bounds(x):
        return -R, R

    def inner_breaks(x):
        # min(pi(x), pi(x+z)) has kinks at z = 0 and z = 2(mu - x)
        pts = [0.0, 2.0 * (mu - x)]
        for f in feats:
            pts += [f, -f]
        return pts

    def inner_integrand(x, zs):
        px = float(target.pdf(x))
        if px <= 0.0:
            return np.zeros_like(zs)
        return zs * zs * inc.density(zs) * np.minimum(px, target.pdf(x + zs))

    raw, err = _iterated_2d(mu - T, mu + T, inner_bounds, inner_integrand, inner_breaks, spec)
    pdf_up = lambda t: float(target.pdf(mu + t))
    pdf_dn = lambda t: float(target.pdf(mu - t))
    trunc = (exp_tail_bound(pdf_up, T, 0) + exp_tail_bound(pdf_dn, T, 0)) * inc.second_moment()
    est_error = err + trunc
    _check_converged(raw, est_error, spec)
    return CovReport(sigma2 - 0.5 * raw, Formula.SYMRW_2D, est_error, spec)


def cov_explicit1d(
    target: TargetDensity, inc: IncrementDensity, spec: QuadratureSpec | None = None
) -> CovReport:
    """Unit-lag covariance from the explicit 1-D representation.

    4 * int_0^inf x [1 - Pi_mu(x)] [1 - 4 x phi(2x)] dx, valid for
    symmetric unimodal targets and symmetric increments.  The atomic
    two-point proposal at x_star is handled in closed form:
    sigma^2 - 4 w(x_star / 2) with w(y) = y^2 [1 - Pi_mu(y)].
    """
    if not target.symmetric_unimodal:
        raise ContractError("the explicit 1-D formula requires a symmetric unimodal target")
    spec = _resolve_spec(target, spec)
    sigma2 = target.variance()

    if inc.kind is IncrementKind.TWO_POINT:
        y = 0.5 * inc.x_star
        w = y * y * float(target.sf_centered(y))
        return CovReport(sigma2 - 4.0 * w, Formula.EXPLICIT_1D, 0.0, spec)

    T = spec.truncation
    upper = max(T, 0.5 * inc.support_radius())

    def g(x):
        x = np.asarray(x, dtype=float)
        return 4.0 * x * target.sf_centered(x) * (1.0 - 4.0 * x * inc.density(2.0 * x))

    value, err = integrate(
        g, 0.0, upper, spec, breakpoints=_increment_breakpoints(inc, halved=True)
    )
    est_error = err + exp_tail_bound(lambda t: float(g(t)), upper)
    _check_converged(value, est_error, spec)
    return CovReport(value, Formula.EXPLICIT_1D, est_error, spec)


def positivity_sweep(
    targets, incs, spec: QuadratureSpec | None = None
) -> PositivityReport:
    """Evaluate cov_explicit1d over a grid and report the minimum.

    Inputs must be symmetric unimodal targets and symmetric increment
    densities (the positivity statement does not cover other kernels).
    An empty grid yields an empty, vacuously positive report.
    """
    min_value = None
    arg_t = arg_k = None
    n = 0
    for target in targets:
        for inc in incs:
            value = cov_explicit1d(target, inc, spec).value
            n += 1
            if min_value is None or value < min_value:
                min_value, arg_t, arg_k = value, target.target_id, inc.increment_id
    return PositivityReport(
        n_pairs=n,
        all_positive=(min_value is None or min_value > 0.0),
        min_value=min_value,
        argmin_target_id=arg_t,
        argmin_kernel_id=arg_k,
    )


def empirical_lag_cov(chain, k: int) -> float:
    """Empirical lag-k autocovariance (1/(N-k)) sum (X_t - mean)(X_{t+k} - mean).

    ``chain`` may be a :class:`~mhcov.sampler.Chain` or a 1-D array;
    ``k = 0`` gives the sample variance.
    """
    states = chain.states if isinstance(chain, Chain) else np.asarray(chain, dtype=float)
    if states.ndim != 1:
        raise ContractError(
            "empirical_lag_cov works on scalar chains; use run_highdim's report "
            "for per-coordinate covariances"
        )
    if k < 0:
        raise ContractError(f"lag must be >= 0, got {k}")
    n = len(states)
    if n <= k + 1:
        raise ContractError(f"chain of length {n} is too short for lag {k}")
    mean = float(np.mean(states))
    if k == 0:
        d = states - mean
        return float(d @ d) / n
    a = states[: n - k] - mean
    b = states[k:] - mean
    return float(a @ b) / (n - k)
