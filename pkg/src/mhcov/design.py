"""Optimal proposal design.

The unit-lag covariance of a symmetric random walk on a symmetric unimodal
target decomposes as sigma^2 - 4 J(phi) with
J(phi) = 4 * int_0^inf w(s) phi(2s) ds and w(y) = y^2 [1 - Pi_mu(y)].
Maximizing J is therefore minimizing the covariance.  This module solves
the first-order condition 2 [1 - Pi_mu(y)] = y pi_mu(y) for the maximizer
y* of w, builds the optimal jump x* = 2 y*, and evaluates J for concrete
increment densities; over densities the supremum w_max = w(y*) is
approached but never attained, while the atomic two-point measure at x*
attains it exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .densities import Family, TargetDensity
from .errors import DesignError, ParameterError
from .proposals import IncrementDensity, IncrementKind, bimodal_rw
from .quadrature import QuadratureSpec, exp_tail_bound, integrate
from .theory import _increment_breakpoints, _resolve_spec, cov_explicit1d

_FOC_TOL = 1e-10
_GRID_POINTS = 10_001


@dataclass(frozen=True)
class DesignResult:
    """Solution of the proposal-design problem for one target.

    Attributes
    ----------
    y_star : float
        Maximizer of w(y) = y^2 [1 - Pi_mu(y)] on (0, inf).
    x_star : float
        Optimal jump length, 2 * y_star.
    w_max : float
        w(y_star).
    cov_infimum : float
        sigma^2 - 4 w_max; the covariance infimum over symmetric proposals,
        attained only by the atomic two-point measure at x_star.
    sigma_pi2 : float
        Target variance.
    unique : bool
        Whether the maximizer is certified unique (log-concave target and
        a single near-maximal cluster on the certification grid).
    foc_residual : float
        |2 [1 - Pi_mu(y*)] - y* pi_mu(y*)|.
    """

    y_star: float
    x_star: float
    w_max: float
    cov_infimum: float
    sigma_pi2: float
    unique: bool
    foc_residual: float


def w_eval(target: TargetDensity, y) -> np.ndarray:
    """Design objective w(y) = y^2 [1 - Pi_mu(y)] for y >= 0 (vectorized)."""
    y = np.asarray(y, dtype=float)
    if np.any(y < 0.0):
        raise ParameterError("w is defined on y >= 0")
    return y * y * target.sf_centered(y)


def _log_concave(target: TargetDensity) -> bool:
    """Certify concavity of the log-density.

    Gaussian and Logistic are log-concave analytically.  GHS and Custom are
    checked numerically through second differences of the log-pdf on a
    grid (GHS is log cosh based and in fact always passes).
    """
    if target.family in (Family.GAUSSIAN, Family.LOGISTIC):
        return True
    T = target.truncation_radius()
    xs = np.linspace(target.mu - T, target.mu + T, 4097)
    lp = target.logpdf(xs)
    finite = np.isfinite(lp)
    second = np.diff(lp[finite], 2)
    return bool(np.all(second <= 1e-9))


def solve_design(target: TargetDensity, tol: float = 1e-12) -> DesignResult:
    """Solve the first-order condition and certify the global maximum.

    Brackets the root of h(y) = y pi_mu(y) / [1 - Pi_mu(y)] - 2 by doubling
    (h is increasing for log-concave targets), refines with Brent's method,
    verifies w''(y*) < 0 by central difference, and checks w(y*) against a
    10^4-point grid on (0, T].
    """
    if not target.symmetric_unimodal:
        raise ParameterError("proposal design requires a symmetric unimodal target")
    sigma2 = target.variance()
    sigma = float(np.sqrt(sigma2))
    mu = target.mu

    def h(y: float) -> float:
        sf = float(target.sf_centered(y))
        if sf <= 0.0:
            return np.inf
        return y * float(target.pdf(mu + y)) / sf - 2.0

    lo, hi = 1e-3 * sigma, sigma
    while h(lo) >= 0.0:
        lo *= 0.1
        if lo < 1e-12 * sigma:
            raise DesignError("first-order condition has no sign change near 0")
    while h(hi) <= 0.0:
        lo = hi
        hi *= 2.0
        if hi > 1e6 * sigma:
            raise DesignError("first-order condition never changes sign (no bracket found)")

    y_star = float(brentq(h, lo, hi, xtol=tol, rtol=4.0 * np.finfo(float).eps))
    foc = abs(2.0 * float(target.sf_centered(y_star)) - y_star * float(target.pdf(mu + y_star)))
    if foc > _FOC_TOL:
        raise DesignError(f"first-order-condition residual {foc:.3e} exceeds {_FOC_TOL}")

    # second-order condition via central difference
    step = 1e-4 * y_star
    w_m, w_0, w_p = (
        float(w_eval(target, np.array([v]))[0])
        for v in (y_star - step, y_star, y_star + step)
    )
    if not w_p + w_m - 2.0 * w_0 < 0.0:
        raise DesignError("second-order condition failed: w is not locally concave at y*")

    # global-max certificate on a grid, and uniqueness of the maximal cluster
    T = target.truncation_radius()
    ys = np.linspace(0.0, T, _GRID_POINTS)[1:]
    w_grid = w_eval(target, ys)
    w_max = w_0
    if float(np.max(w_grid)) > w_max + 1e-9 * max(1.0, w_max):
        raise DesignError("grid scan found a larger w value than the solved maximizer")
    near = ys[w_grid > w_max - 1e-6]
    single_cluster = bool(near.size == 0 or (near.max() - near.min()) <= 4.0 * (ys[1] - ys[0]) + 2.0 * step)
    unique = _log_concave(target) and single_cluster

    return DesignResult(
        y_star=y_star,
        x_star=2.0 * y_star,
        w_max=w_max,
        cov_infimum=sigma2 - 4.0 * w_max,
        sigma_pi2=sigma2,
        unique=unique,
        foc_residual=foc,
    )


def design_functional(
    target: TargetDensity, inc: IncrementDensity, spec: QuadratureSpec | None = None
) -> float:
    """J(phi) = 4 * int_0^inf w(s) phi(2s) ds for an increment law.

    For the atomic two-point measure at x_star this is w(x_star / 2)
    exactly; for every continuous increment density it is strictly below
    w_max.
    """
    if inc.kind is IncrementKind.TWO_POINT:
        return float(w_eval(target, np.array([0.5 * inc.x_star]))[0])
    spec = _resolve_spec(target, spec)
    upper = max(spec.truncation, 0.5 * inc.support_radius())

    def f(s):
        s = np.asarray(s, dtype=float)
        return 4.0 * w_eval(target, s) * inc.density(2.0 * s)

    value, err = integrate(
        f, 0.0, upper, spec, breakpoints=_increment_breakpoints(inc, halved=True)
    )
    tail = exp_tail_bound(lambda t: float(f(np.array([t]))[0]), upper)
    if err + tail > max(spec.abs_tol, spec.rel_tol * abs(value)):
        raise DesignError(f"design-functional quadrature error {err + tail:.3e} too large")
    return value


def covariance_at_design(
    target: TargetDensity,
    sigma_q: float,
    spec: QuadratureSpec | None = None,
    design: DesignResult | None = None,
) -> float:
    """Covariance of the bimodal proposal centered at the designed x*.

    As sigma_q shrinks toward 0 the value converges (from above) to the
    two-point infimum sigma^2 - 4 w_max.
    """
    if design is None:
        design = solve_design(target)
    return cov_explicit1d(target, bimodal_rw(design.x_star, sigma_q), spec).value
