"""Proposal kernels.

Two shapes of proposal appear here:

* symmetric random-walk increments (:class:`IncrementDensity`): Gaussian,
  the bimodal Gaussian mixture used by the optimal design, and its atomic
  two-point limit, wrapped by :class:`RandomWalkKernel`;
* the sign-flipping Gaussian kernel q(y|x) = Normal(-c x, var)
  (:class:`FlipGaussianKernel`), the non-random-walk counterexample whose
  stationary chain has negative unit-lag covariance.

The two-point increment is an atomic measure, not a density: ``density``
raises, closed-form theory handles it specially, and the sampler refuses
it unless explicitly allowed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import AtomicMeasureError, InvariantViolationError, ParameterError

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class IncrementKind(enum.Enum):
    """Supported random-walk increment families."""

    GAUSSIAN_RW = "rw-gauss"
    BIMODAL_RW = "rw-bimodal"
    TWO_POINT = "two-point"


@dataclass(frozen=True)
class GridSpec:
    """Uniform evaluation grid on [lo, hi] used by grid-certified checks."""

    lo: float
    hi: float
    n: int = 200_001

    def __post_init__(self):
        if not (self.hi > self.lo):
            raise ParameterError("grid needs hi > lo")
        if self.n < 2:
            raise ParameterError("grid needs at least 2 points")

    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)


@dataclass(frozen=True)
class IncrementDensity:
    """Law of the random-walk increment Z, symmetric about 0.

    Attributes
    ----------
    kind : IncrementKind
    sigma_q : float or None
        Component standard deviation (unused for TWO_POINT).
    x_star : float or None
        Mixture/atom center (unused for GAUSSIAN_RW).
    """

    kind: IncrementKind
    sigma_q: float | None = None
    x_star: float | None = None

    def __post_init__(self):
        if self.kind is IncrementKind.GAUSSIAN_RW:
            if self.sigma_q is None or not self.sigma_q > 0.0:
                raise ParameterError(f"Gaussian increment needs sigma_q > 0, got {self.sigma_q}")
            if self.x_star is not None:
                raise ParameterError("x_star is not a Gaussian-increment parameter")
        elif self.kind is IncrementKind.BIMODAL_RW:
            if self.sigma_q is None or not self.sigma_q > 0.0:
                raise ParameterError(f"bimodal increment needs sigma_q > 0, got {self.sigma_q}")
            if self.x_star is None or not self.x_star >= 0.0:
                raise ParameterError(f"bimodal increment needs x_star >= 0, got {self.x_star}")
        else:
            if self.x_star is None or not self.x_star > 0.0:
                raise ParameterError(f"two-point increment needs x_star > 0, got {self.x_star}")
            if self.sigma_q is not None:
                raise ParameterError("sigma_q is not a two-point parameter")

    # ------------------------------------------------------------- evaluation
    @property
    def is_density(self) -> bool:
        """False for the atomic two-point measure."""
        return self.kind is not IncrementKind.TWO_POINT

    def density(self, z) -> np.ndarray:
        """Increment density phi(z) (vectorized)."""
        z = np.asarray(z, dtype=float)
        if self.kind is IncrementKind.GAUSSIAN_RW:
            s = self.sigma_q
            return np.exp(-0.5 * (z / s) ** 2) / (s * _SQRT_2PI)
        if self.kind is IncrementKind.BIMODAL_RW:
            s, m = self.sigma_q, self.x_star
            norm = 0.5 / (s * _SQRT_2PI)
            return norm * (
                np.exp(-0.5 * ((z - m) / s) ** 2) + np.exp(-0.5 * ((z + m) / s) ** 2)
            )
        raise AtomicMeasureError(
            "the two-point measure has no density; use its closed-form handling"
        )

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw ``n`` increments (vectorized).

        The bimodal mixture draws a fair sign then a Gaussian around the
        signed center; the two-point measure returns +-x_star.
        """
        if self.kind is IncrementKind.GAUSSIAN_RW:
            return rng.normal(0.0, self.sigma_q, size=n)
        signs = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        if self.kind is IncrementKind.TWO_POINT:
            return signs * self.x_star
        return signs * self.x_star + rng.normal(0.0, self.sigma_q, size=n)

    # ------------------------------------------------------------- structure
    def support_radius(self) -> float:
        """Radius beyond which the increment mass is negligible (< 1e-32)."""
        if self.kind is IncrementKind.GAUSSIAN_RW:
            return 12.0 * self.sigma_q
        if self.kind is IncrementKind.BIMODAL_RW:
            return self.x_star + 12.0 * self.sigma_q
        return self.x_star

    def tail_mass(self, z: float) -> float:
        """P(|Z| > z), used in truncation-error bounds."""
        from scipy.special import ndtr

        if self.kind is IncrementKind.GAUSSIAN_RW:
            return 2.0 * float(ndtr(-z / self.sigma_q))
        if self.kind is IncrementKind.BIMODAL_RW:
            return float(
                ndtr(-(z - self.x_star) / self.sigma_q) + ndtr(-(z + self.x_star) / self.sigma_q)
            )
        return 0.0 if z >= self.x_star else 1.0

    def second_moment(self) -> float:
        """E[Z^2]."""
        if self.kind is IncrementKind.GAUSSIAN_RW:
            return self.sigma_q**2
        if self.kind is IncrementKind.BIMODAL_RW:
            return self.x_star**2 + self.sigma_q**2
        return self.x_star**2

    def feature_points(self) -> tuple[float, ...]:
        """Positive abscissas where phi concentrates; quadrature breakpoints."""
        if self.kind is IncrementKind.BIMODAL_RW:
            m, s = self.x_star, self.sigma_q
            return tuple(p for p in (m - 6.0 * s, m, m + 6.0 * s) if p > 0.0)
        return ()

    def half_bound_margin(
        self, grid: GridSpec | None = None, *, strict: bool = False
    ) -> float:
        """1/2 minus the grid maximum of |z| phi(z).

        A positive margin certifies the bound sup |z| phi(z) < 1/2, which
        makes the bracket 1 - 4 x phi(2x) in the explicit covariance
        integrand positive.  The bound holds for the Gaussian family at
        every scale (margin 1/2 - e^{-1/2}/sqrt(2 pi), scale-free) but
        genuinely fails for bimodal mixtures concentrated far from the
        origin: at z = x_star, |z| phi(z) is about x_star / (4 sigma_q)
        once sigma_q << x_star.  ``strict=True`` turns a non-positive
        margin into :class:`~mhcov.errors.InvariantViolationError`;
        the default reports the honest signed value.
        """
        if not self.is_density:
            raise AtomicMeasureError("half-bound margin is defined for density kinds only")
        if grid is None:
            grid = GridSpec(0.0, self.support_radius())
        z = grid.points()
        margin = 0.5 - float(np.max(np.abs(z) * self.density(z)))
        if strict and not margin > 0.0:
            raise InvariantViolationError(
                f"|z| phi(z) reaches {0.5 - margin:.6g} >= 1/2 for {self.increment_id}"
            )
        return margin

    @property
    def increment_id(self) -> str:
        """Canonical spec string, e.g. ``rw-bimodal:xstar=2,sigma=0.4``."""
        if self.kind is IncrementKind.GAUSSIAN_RW:
            return f"rw-gauss:sigma={self.sigma_q:g}"
        if self.kind is IncrementKind.BIMODAL_RW:
            return f"rw-bimodal:xstar={self.x_star:g},sigma={self.sigma_q:g}"
        return f"two-point:xstar={self.x_star:g}"


def gaussian_rw(sigma_q: float) -> IncrementDensity:
    """Gaussian random-walk increment with standard deviation ``sigma_q``."""
    return IncrementDensity(IncrementKind.GAUSSIAN_RW, sigma_q=float(sigma_q))


def bimodal_rw(x_star: float, sigma_q: float) -> IncrementDensity:
    """Even mixture of Normal(+-x_star, sigma_q^2) components."""
    return IncrementDensity(
        IncrementKind.BIMODAL_RW, sigma_q=float(sigma_q), x_star=float(x_star)
    )


def two_point(x_star: float) -> IncrementDensity:
    """Atomic measure putting mass 1/2 on each of +-x_star."""
    return IncrementDensity(IncrementKind.TWO_POINT, x_star=float(x_star))


@dataclass(frozen=True)
class RandomWalkKernel:
    """Proposal Y = x + Z with Z from a symmetric increment law."""

    increment: IncrementDensity

    is_symmetric_rw = True

    def density(self, x: float, y) -> np.ndarray:
        """q(y | x) = phi(y - x) (vectorized in ``y``)."""
        return self.increment.density(np.asarray(y, dtype=float) - x)

    def y_window(self, x: float) -> tuple[float, float]:
        """Interval holding all but negligible proposal mass from ``x``."""
        r = self.increment.support_radius()
        return x - r, x + r

    @property
    def kernel_id(self) -> str:
        return self.increment.increment_id


@dataclass(frozen=True)
class FlipGaussianKernel:
    """State-flipping proposal q(y | x) = Normal(-c x, var), c in (0, 1).

    Not a random walk: the proposal median jumps to the opposite side of
    the origin, which is what drives the unit-lag covariance negative on a
    symmetric target.
    """

    c: float
    var: float = 2.0

    is_symmetric_rw = False

    def __post_init__(self):
        if not (0.0 < self.c < 1.0):
            raise ParameterError(f"flip coefficient must lie in (0, 1), got {self.c}")
        if not self.var > 0.0:
            raise ParameterError(f"flip variance must be positive, got {self.var}")

    def density(self, x: float, y) -> np.ndarray:
        """q(y | x) (vectorized in ``y``)."""
        y = np.asarray(y, dtype=float)
        sd = math.sqrt(self.var)
        return np.exp(-0.5 * ((y + self.c * x) ** 2) / self.var) / (sd * _SQRT_2PI)

    def log_density(self, x, y) -> np.ndarray:
        """log q(y | x) (vectorized in either argument)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return -0.5 * ((y + self.c * x) ** 2) / self.var - 0.5 * math.log(
            2.0 * math.pi * self.var
        )

    def y_window(self, x: float) -> tuple[float, float]:
        """Interval holding all but negligible proposal mass from ``x``."""
        center = -self.c * x
        r = 12.0 * math.sqrt(self.var)
        return center - r, center + r

    @property
    def kernel_id(self) -> str:
        return f"flip:c={self.c:g},var={self.var:g}"


ProposalKernel = RandomWalkKernel | FlipGaussianKernel


def parse_kernel_spec(text: str) -> ProposalKernel:
    """Parse a kernel spec string.

    Forms: ``rw-gauss:sigma=S``, ``rw-bimodal:xstar=X,sigma=S``,
    ``two-point:xstar=X``, ``flip:c=C,var=V``.
    """
    name, _, params = text.strip().partition(":")
    name = name.strip().lower()
    kwargs: dict[str, float] = {}
    if params:
        for item in params.split(","):
            key, eq, value = item.partition("=")
            if not eq or not key.strip():
                raise ParameterError(f"malformed kernel parameter {item!r} in {text!r}")
            try:
                kwargs[key.strip()] = float(value)
            except ValueError:
                raise ParameterError(f"non-numeric kernel parameter {item!r} in {text!r}") from None
    try:
        if name == "rw-gauss":
            kernel = RandomWalkKernel(gaussian_rw(kwargs.pop("sigma")))
        elif name == "rw-bimodal":
            kernel = RandomWalkKernel(bimodal_rw(kwargs.pop("xstar"), kwargs.pop("sigma")))
        elif name == "two-point":
            kernel = RandomWalkKernel(two_point(kwargs.pop("xstar")))
        elif name == "flip":
            kernel = FlipGaussianKernel(c=kwargs.pop("c"), var=kwargs.pop("var", 2.0))
        else:
            raise ParameterError(
                f"unknown kernel {name!r} (expected rw-gauss|rw-bimodal|two-point|flip)"
            )
    except KeyError as missing:
        raise ParameterError(f"kernel {name!r} is missing parameter {missing}") from None
    if kwargs:
        raise ParameterError(f"unknown parameters {sorted(kwargs)} for kernel {name!r}")
    return kernel
