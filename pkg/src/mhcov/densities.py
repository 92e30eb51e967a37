"""Target-density families and the evaluation interface other modules use.

Three analytic families (Gaussian, Logistic, generalized hyperbolic secant)
plus a tabulated Custom family.  Every instance exposes vectorized
``pdf``/``logpdf``/``cdf``, a numerically stable centered survival function
``sf_centered``, the variance computed by two independent integral routes,
the tail-rule truncation radius, and direct sampling where an inverse cdf
is available.

Instances are immutable; the GHS cdf table is built eagerly at construction
so concurrent reads are safe.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.special import expit, gammaln, ndtr

from .errors import ConsistencyError, ContractError, NumericError, ParameterError
from .quadrature import QuadratureSpec, cumulative_gk, integrate

_TAIL_RULE = 1e-14        # truncation: smallest doubling T with pdf(mu+-T)*T below this
_VARIANCE_ROUTE_TOL = 1e-8
_LOG_2PI = math.log(2.0 * math.pi)


class Family(enum.Enum):
    """Supported target families."""

    GAUSSIAN = "gauss"
    LOGISTIC = "logistic"
    GHS = "ghs"
    CUSTOM = "custom"


def _log_cosh(u: np.ndarray) -> np.ndarray:
    # |u| + log1p(e^{-2|u|}) - log 2 avoids cosh overflow for large |u|
    a = np.abs(u)
    return a + np.log1p(np.exp(-2.0 * a)) - math.log(2.0)


class _GhsTable:
    """Eagerly built cdf table for the GHS family.

    Tabulates G(t) = integral of the pdf over [mu, mu+t] on a fine uniform
    grid, one Gauss-Kronrod panel per grid interval, then interpolates with
    a cubic Hermite spline whose derivatives are the exact pdf values (so
    the interpolant is monotone wherever the pdf is positive).  Only the
    upper half is stored; the lower half follows by symmetry, which makes
    cdf(mu) = 1/2 exact.
    """

    __slots__ = ("T", "spline", "tail_mass", "tail_rate")

    def __init__(self, pdf_centered, T: float, scale: float, alpha: float, c_alpha: float):
        # grid spacing keeps the quartic Hermite interpolation error below
        # 1e-10 given pdf derivatives growing like (alpha*pi/(2*scale))^4
        h = 0.004 * scale / max(1.0, alpha / 1.5)
        grid = np.linspace(0.0, T, int(math.ceil(T / h)) + 2)
        cum, cum_err = cumulative_gk(pdf_centered, grid)
        self.spline = CubicHermiteSpline(grid, cum, pdf_centered(grid))
        self.T = T
        # closed-form bound on the mass beyond T: sech^a(u) <= 2^a e^{-a u}
        self.tail_rate = alpha * math.pi / (2.0 * scale)
        self.tail_mass = (2.0**alpha * c_alpha / (alpha * math.pi / 2.0)) * math.exp(
            -self.tail_rate * T
        )
        gap = abs(cum[-1] + self.tail_mass - 0.5)
        if cum_err + gap > 1e-10:
            raise NumericError(
                f"GHS cdf tabulation achieved error {cum_err + gap:.3e}, above 1e-10",
                achieved_tol=cum_err + gap,
            )

    def upper_mass(self, t: np.ndarray) -> np.ndarray:
        """G(t) for t >= 0, i.e. P(mu <= X <= mu + t)."""
        t = np.asarray(t, dtype=float)
        inside = self.spline(np.minimum(t, self.T))
        beyond = 0.5 - self.tail_mass * np.exp(-self.tail_rate * (np.maximum(t, self.T) - self.T))
        return np.where(t <= self.T, inside, beyond)


def _segment_masses(p_lo: np.ndarray, p_hi: np.ndarray, slopes: np.ndarray, dx: np.ndarray) -> np.ndarray:
    """Exact integrals of exp-linear segments with endpoint densities p_lo, p_hi.

    Segments touching a zero endpoint carry zero mass (the exp-linear limit
    as the log-density drops to -inf).
    """
    live = (p_lo > 0.0) & (p_hi > 0.0)
    b = np.where(live & (slopes != 0.0), slopes, 1.0)
    flat = live & (slopes == 0.0)
    masses = np.where(live, p_lo * np.expm1(b * dx) / b, 0.0)
    return np.where(flat, p_lo * dx, masses)


class _CustomTable:
    """Normalized exp-linear interpolant for a tabulated log-pdf.

    The log-pdf is linear between grid points, so every partial integral of
    the pdf has a closed form; the cdf is exact for the interpolated model
    (no secondary interpolation grid), which keeps the moment/tail variance
    identity intact for tabulated targets.
    """

    __slots__ = ("x_lo", "x_hi", "xs", "log_pdf", "pdf_at", "slopes", "live", "cum", "mean", "var")

    def __init__(self, xs: np.ndarray, log_pdf: np.ndarray, spec: QuadratureSpec):
        self.xs = xs
        self.x_lo, self.x_hi = float(xs[0]), float(xs[-1])
        dx = np.diff(xs)
        p_raw = np.exp(log_pdf)
        with np.errstate(invalid="ignore"):
            raw_slopes = np.diff(log_pdf) / dx
        live = (p_raw[:-1] > 0.0) & (p_raw[1:] > 0.0)
        slopes = np.where(live, raw_slopes, 0.0)
        mass = float(np.sum(_segment_masses(p_raw[:-1], p_raw[1:], slopes, dx)))
        if not (mass > 0.0 and math.isfinite(mass)):
            raise ParameterError("tabulated log-pdf does not integrate to a positive mass")
        self.log_pdf = log_pdf - math.log(mass)
        self.pdf_at = np.exp(self.log_pdf)
        self.slopes = slopes
        self.live = live
        seg = _segment_masses(self.pdf_at[:-1], self.pdf_at[1:], slopes, dx)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        self.cum = cum / cum[-1]
        pdf = lambda x: np.exp(np.interp(x, xs, self.log_pdf, left=-np.inf, right=-np.inf))
        m1, _ = integrate(lambda x: x * pdf(x), self.x_lo, self.x_hi, spec, breakpoints=xs[1:-1])
        m2, _ = integrate(lambda x: x * x * pdf(x), self.x_lo, self.x_hi, spec, breakpoints=xs[1:-1])
        self.mean = m1
        self.var = m2 - m1 * m1

    def cdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.xs, x, side="right") - 1, 0, len(self.xs) - 2)
        t = np.clip(x, self.x_lo, self.x_hi) - self.xs[idx]
        p0 = self.pdf_at[idx]
        b = self.slopes[idx]
        b_safe = np.where(b == 0.0, 1.0, b)
        partial = np.where(b == 0.0, p0 * t, p0 * np.expm1(b_safe * t) / b_safe)
        out = self.cum[idx] + np.where(self.live[idx], partial, 0.0)
        out = np.where(x < self.x_lo, 0.0, np.where(x > self.x_hi, 1.0, out))
        return np.clip(out, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class TargetDensity:
    """A 1-D target distribution with location ``mu``.

    Build instances through :func:`gaussian`, :func:`logistic`, :func:`ghs`,
    :func:`custom_tabulated`, or :func:`parse_target_spec` rather than the
    raw constructor.

    Attributes
    ----------
    family : Family
    mu : float
        Location (center of symmetry for the symmetric families).
    scale : float
        Scale parameter, > 0.
    alpha : float or None
        GHS shape exponent, > 0; None for other families.
    symmetric_unimodal : bool
        Whether the density is symmetric about ``mu`` and non-increasing
        away from it.  True automatically for the analytic families;
        caller-asserted (and spot-verified) for Custom.
    """

    family: Family
    mu: float = 0.0
    scale: float = 1.0
    alpha: float | None = None
    symmetric_unimodal: bool = True
    grid_x: np.ndarray | None = field(default=None, repr=False)
    grid_logpdf: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if not (self.scale > 0.0 and math.isfinite(self.scale)):
            raise ParameterError(f"scale must be positive and finite, got {self.scale}")
        if not math.isfinite(self.mu):
            raise ParameterError(f"location must be finite, got {self.mu}")
        if self.family is Family.GHS:
            if self.alpha is None or not (self.alpha > 0.0 and math.isfinite(self.alpha)):
                raise ParameterError(f"GHS shape alpha must be positive, got {self.alpha}")
            log_c = (
                0.5 * math.log(math.pi)
                - math.log(2.0)
                + gammaln((self.alpha + 1.0) / 2.0)
                - gammaln(self.alpha / 2.0)
            )
            object.__setattr__(self, "_log_c", float(log_c))
            object.__setattr__(
                self,
                "_ghs",
                _GhsTable(
                    lambda t: self.pdf(self.mu + np.asarray(t)),
                    self._tail_radius(),
                    self.scale,
                    self.alpha,
                    math.exp(log_c),
                ),
            )
        elif self.alpha is not None:
            raise ParameterError("alpha is a GHS-only parameter")
        if self.family is Family.CUSTOM:
            self._init_custom()
        object.__setattr__(self, "_variance", None)

    # ------------------------------------------------------------- evaluation
    def logpdf(self, x) -> np.ndarray:
        """Natural log of the density at ``x`` (vectorized)."""
        x = np.asarray(x, dtype=float)
        u = (x - self.mu) / self.scale
        if self.family is Family.GAUSSIAN:
            return -0.5 * u * u - math.log(self.scale) - 0.5 * _LOG_2PI
        if self.family is Family.LOGISTIC:
            # -|u| - 2 log(1 + e^{-|u|}) is exact for both signs of u
            a = np.abs(u)
            return -a - 2.0 * np.log1p(np.exp(-a)) - math.log(self.scale)
        if self.family is Family.GHS:
            arg = math.pi * u / 2.0
            return self._log_c - math.log(self.scale) - self.alpha * _log_cosh(arg)
        tab: _CustomTable = self._custom
        return np.interp(x, tab.xs, tab.log_pdf, left=-np.inf, right=-np.inf)

    def pdf(self, x) -> np.ndarray:
        """Density at ``x`` (vectorized)."""
        return np.exp(self.logpdf(x))

    def cdf(self, x) -> np.ndarray:
        """Distribution function at ``x`` (vectorized)."""
        x = np.asarray(x, dtype=float)
        if self.family is Family.GAUSSIAN:
            return ndtr((x - self.mu) / self.scale)
        if self.family is Family.LOGISTIC:
            return expit((x - self.mu) / self.scale)
        if self.family is Family.GHS:
            t = x - self.mu
            return 0.5 + np.sign(t) * self._ghs.upper_mass(np.abs(t))
        tab: _CustomTable = self._custom
        return tab.cdf(x)

    def sf_centered(self, t) -> np.ndarray:
        """Upper tail P(X > mu + t), computed without the 1 - cdf cancellation.

        This is the `1 - centered cdf` factor appearing in every 1-D
        covariance integrand and in the design objective.
        """
        t = np.asarray(t, dtype=float)
        if self.family is Family.GAUSSIAN:
            return ndtr(-t / self.scale)
        if self.family is Family.LOGISTIC:
            return expit(-t / self.scale)
        if self.family is Family.GHS:
            return 0.5 - np.sign(t) * self._ghs.upper_mass(np.abs(t))
        return 1.0 - self.cdf(self.mu + t)

    def dlogpdf(self, x) -> np.ndarray:
        """Derivative of the log-density at ``x`` (vectorized)."""
        x = np.asarray(x, dtype=float)
        u = (x - self.mu) / self.scale
        if self.family is Family.GAUSSIAN:
            return -u / self.scale
        if self.family is Family.LOGISTIC:
            return -np.tanh(u / 2.0) / self.scale
        if self.family is Family.GHS:
            k = self.alpha * math.pi / (2.0 * self.scale)
            return -k * np.tanh(math.pi * u / 2.0)
        tab: _CustomTable = self._custom
        h = float(np.min(np.diff(tab.xs)))
        return (self.logpdf(x + 0.5 * h) - self.logpdf(x - 0.5 * h)) / h

    # ---------------------------------------------------------------- moments
    def variance(self) -> float:
        """Variance, computed by two independent integral routes.

        For symmetric families the second-moment route 2*int t^2 pi(mu+t)
        and the tail route 4*int t*sf(t) must agree within 1e-8 (the
        integration-by-parts identity); disagreement raises
        :class:`~mhcov.errors.ConsistencyError`.  The second-moment value
        is returned.
        """
        if self._variance is None:
            object.__setattr__(self, "_variance", self._compute_variance())
        return self._variance

    def _compute_variance(self) -> float:
        if self.family is Family.CUSTOM and not self.symmetric_unimodal:
            return self._custom.var
        spec = QuadratureSpec(abs_tol=1e-12, rel_tol=1e-11)
        T = self.truncation_radius()
        breaks: tuple[float, ...] = ()
        if self.family is Family.CUSTOM:
            # the interpolated pdf and cdf both have kinks exactly at the
            # table points; with panel edges there each panel is smooth
            rel = self._custom.xs - self.mu
            breaks = tuple(rel[(rel > 0.0) & (rel < T)])
        moment, _ = integrate(
            lambda t: 2.0 * t * t * self.pdf(self.mu + t), 0.0, T, spec,
            breakpoints=breaks,
        )
        tail, _ = integrate(
            lambda t: 4.0 * t * self.sf_centered(t), 0.0, T, spec,
            breakpoints=breaks,
        )
        if abs(moment - tail) > _VARIANCE_ROUTE_TOL:
            raise ConsistencyError(
                f"variance routes disagree: moment={moment!r} tail={tail!r}",
                achieved_tol=abs(moment - tail),
            )
        return moment

    def truncation_radius(self) -> float:
        """Smallest doubling T with pdf(mu +- T) * T below the tail rule."""
        if self.family is Family.CUSTOM:
            tab: _CustomTable = self._custom
            return max(self.mu - tab.x_lo, tab.x_hi - self.mu)
        return self._tail_radius()

    def _tail_radius(self) -> float:
        T = self.scale
        while True:
            lo, hi = self.pdf(np.array([self.mu - T, self.mu + T])) * T
            if max(lo, hi) < _TAIL_RULE:
                return T
            T *= 2.0
            if T > 1e12:
                raise NumericError("tail rule did not terminate; density decays too slowly")

    # --------------------------------------------------------------- sampling
    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw ``n`` independent variates (vectorized).

        GHS uses bisection on the cached cdf table; Custom targets have no
        direct sampler and must be reached through burn-in.
        """
        if self.family is Family.GAUSSIAN:
            return rng.normal(self.mu, self.scale, size=n)
        if self.family is Family.LOGISTIC:
            return rng.logistic(self.mu, self.scale, size=n)
        if self.family is Family.GHS:
            u = rng.uniform(0.0, 1.0, size=n)
            target = np.abs(u - 0.5)
            lo = np.zeros(n)
            hi = np.full(n, self._ghs.T)
            for _ in range(52):
                mid = 0.5 * (lo + hi)
                below = self._ghs.upper_mass(mid) < target
                lo = np.where(below, mid, lo)
                hi = np.where(below, hi, mid)
            return self.mu + np.sign(u - 0.5) * 0.5 * (lo + hi)
        raise ContractError("Custom targets have no direct sampler; initialize with burn-in")

    # ------------------------------------------------------------- identifiers
    @property
    def target_id(self) -> str:
        """Canonical spec string, e.g. ``ghs:alpha=1,mu=-7,scale=1``."""
        if self.family is Family.GHS:
            return f"ghs:alpha={self.alpha:g},mu={self.mu:g},scale={self.scale:g}"
        if self.family is Family.CUSTOM:
            return f"custom:n={len(self.grid_x)},mu={self.mu:g}"
        return f"{self.family.value}:mu={self.mu:g},scale={self.scale:g}"

    def __repr__(self) -> str:
        return f"TargetDensity({self.target_id})"

    # ------------------------------------------------------------ private bits
    def _init_custom(self):
        if self.grid_x is None or self.grid_logpdf is None:
            raise ParameterError("Custom family requires grid_x and grid_logpdf")
        xs = np.asarray(self.grid_x, dtype=float)
        lp = np.asarray(self.grid_logpdf, dtype=float)
        if xs.ndim != 1 or xs.shape != lp.shape or len(xs) < 8:
            raise ParameterError("Custom grids must be 1-D, equal length, and have >= 8 points")
        if np.any(np.diff(xs) <= 0):
            raise ParameterError("Custom grid_x must be strictly increasing")
        object.__setattr__(self, "grid_x", xs)
        object.__setattr__(self, "grid_logpdf", lp)
        object.__setattr__(self, "_custom", _CustomTable(xs, lp, QuadratureSpec()))
        if self.symmetric_unimodal:
            self._verify_symmetric_unimodal()

    def _verify_symmetric_unimodal(self):
        # spot check of the caller-asserted flag on the tabulation grid
        tab: _CustomTable = self._custom
        t = np.linspace(0.0, min(self.mu - tab.x_lo, tab.x_hi - self.mu), 257)[1:]
        up, down = self.pdf(self.mu + t), self.pdf(self.mu - t)
        scale = float(np.max(self.pdf(np.array([self.mu])))) or 1.0
        if np.max(np.abs(up - down)) > 1e-6 * scale:
            raise ParameterError("tabulated density is not symmetric about mu as asserted")
        if np.any(np.diff(up) > 1e-9 * scale):
            raise ParameterError("tabulated density is not non-increasing away from mu")

    def _scalar_logpdf(self):
        """Fast float -> float log-density closure for the chain hot loop."""
        mu, scale = self.mu, self.scale
        if self.family is Family.GAUSSIAN:
            c = -math.log(scale) - 0.5 * _LOG_2PI
            inv2 = 0.5 / (scale * scale)

            def f(x: float, _c=c, _i=inv2, _m=mu) -> float:
                d = x - _m
                return _c - _i * d * d

            return f
        if self.family is Family.LOGISTIC:
            c = -math.log(scale)

            def f(x: float, _c=c, _m=mu, _s=scale) -> float:
                a = abs((x - _m) / _s)
                return _c - a - 2.0 * math.log1p(math.exp(-a))

            return f
        if self.family is Family.GHS:
            c = self._log_c - math.log(scale)
            k = math.pi / (2.0 * scale)
            alpha = self.alpha

            def f(x: float, _c=c, _k=k, _a=alpha, _m=mu) -> float:
                u = abs(_k * (x - _m))
                return _c - _a * (u + math.log1p(math.exp(-2.0 * u)) - 0.6931471805599453)

            return f
        return lambda x: float(self.logpdf(x))


# -------------------------------------------------------------- constructors
def gaussian(mu: float = 0.0, scale: float = 1.0) -> TargetDensity:
    """Normal target with mean ``mu`` and standard deviation ``scale``."""
    return TargetDensity(Family.GAUSSIAN, mu=float(mu), scale=float(scale))


def logistic(mu: float = 0.0, scale: float = 1.0) -> TargetDensity:
    """Logistic target with location ``mu`` and scale ``s`` (variance s^2 pi^2/3)."""
    return TargetDensity(Family.LOGISTIC, mu=float(mu), scale=float(scale))


def ghs(alpha: float = 1.0, mu: float = 0.0, scale: float = 1.0) -> TargetDensity:
    """Generalized hyperbolic secant target, density proportional to
    sech^alpha(pi (x - mu) / (2 scale))."""
    return TargetDensity(Family.GHS, mu=float(mu), scale=float(scale), alpha=float(alpha))


def custom_tabulated(
    grid_x, grid_logpdf, mu: float | None = None, symmetric_unimodal: bool = False
) -> TargetDensity:
    """Target defined by a tabulated (unnormalized) log-pdf on a grid.

    ``mu`` defaults to the grid point of maximal log-pdf.  The
    ``symmetric_unimodal`` flag is the caller's assertion and is
    spot-verified on the grid.
    """
    xs = np.asarray(grid_x, dtype=float)
    lp = np.asarray(grid_logpdf, dtype=float)
    if mu is None:
        mu = float(xs[int(np.argmax(lp))])
    return TargetDensity(
        Family.CUSTOM,
        mu=float(mu),
        scale=1.0,
        symmetric_unimodal=symmetric_unimodal,
        grid_x=xs,
        grid_logpdf=lp,
    )


def parse_target_spec(text: str) -> TargetDensity:
    """Parse a ``family:param=value,...`` string into a target.

    Examples: ``gauss:mu=0,scale=1``, ``logistic:mu=3``,
    ``ghs:alpha=1,mu=-7,scale=1``.
    """
    name, _, params = text.strip().partition(":")
    kwargs: dict[str, float] = {}
    if params:
        for item in params.split(","):
            key, _, value = item.partition("=")
            if not _ or not key.strip():
                raise ParameterError(f"malformed target parameter {item!r} in {text!r}")
            try:
                kwargs[key.strip()] = float(value)
            except ValueError:
                raise ParameterError(f"non-numeric target parameter {item!r} in {text!r}") from None
    makers = {"gauss": gaussian, "gaussian": gaussian, "logistic": logistic, "ghs": ghs}
    maker = makers.get(name.strip().lower())
    if maker is None:
        raise ParameterError(f"unknown target family {name!r} (expected gauss|logistic|ghs)")
    try:
        return maker(**kwargs)
    except TypeError:
        raise ParameterError(f"invalid parameters {sorted(kwargs)} for target family {name!r}") from None
