"""Dimension scaling of random-walk Metropolis on product targets.

A product of d scalar targets is explored with isotropic Gaussian
increments of per-coordinate variance ell^2/d.  As d grows the mean
acceptance rate tends to 2*Phi(-ell*sqrt(mbar)/2), where mbar averages
each component's roughness m_i = E[(d/dx log p_i)^2], and the lag-1
covariance matrix of the stationary chain is, to first order in 1/d,

    diag(sigma_i^2) - (ell^2 / (2d)) * 2*Phi(-ell*sqrt(mbar)/2) * I.

The efficiency curve h(ell) = ell^2 * 2*Phi(-ell*sqrt(mbar)/2) is
maximized at ell_star = 2.38/sqrt(mbar), which pins the acceptance rate
at 2*Phi(-1.19) = 0.234 regardless of the target: the usual tuning rule.
This module computes the roughness constants, the predicted quantities,
and runs the d-dimensional chains that verify them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .densities import Family, TargetDensity
from .errors import ContractError, InvalidStateError, NumericError, ParameterError
from .quadrature import QuadratureSpec, adaptive_gk, exp_tail_bound
from .sampler import _MASK64, Chain, FixedPoint, RunConfig, derive_rng

# The empirical lag-1 cross-covariance matrix costs O(d^2 N); beyond this
# dimension only the diagonal is computed and the off-diagonal fields are NaN.
_CROSSCOV_MAX_D = 100
_BLOCK = 65536
# Near the optimal step scale the chain's correlation time is of order d/h,
# i.e. tens of steps per effective sample, so the SE of a lag-1 covariance
# needs batches much longer than sqrt(n).  Fifty batches keep each one
# around n/50 steps (>= 60 correlation times at the tested sizes) while
# still averaging enough batches for a stable spread estimate.
_SE_BATCHES = 50
_BATCH_SE_MIN_N = 10_000

# Roughness is a pure function of the closed-form families' parameters, so
# results are shared across product constructions (50 identical components
# cost one quadrature).  Custom targets are excluded: their id string does
# not pin down the tabulated grid.
_ROUGHNESS_CACHE: dict[str, float] = {}


def roughness(component: TargetDensity, spec: QuadratureSpec | None = None) -> float:
    """Mean squared slope m = E[(d/dx log p(X))^2] of a scalar target.

    Computed by adaptive quadrature of (dlogpdf)^2 * pdf over the
    truncated support plus exponential tail bounds.  Raises NumericError
    when the integral fails to converge (effectively infinite roughness).
    """
    key = component.target_id if component.family is not Family.CUSTOM else None
    if key is not None and key in _ROUGHNESS_CACHE:
        return _ROUGHNESS_CACHE[key]
    if spec is None:
        spec = QuadratureSpec()
    T = spec.truncation if spec.truncation is not None else component.truncation_radius()
    mu = component.mu

    def integrand(x):
        return component.dlogpdf(x) ** 2 * component.pdf(x)

    value, err = adaptive_gk(
        integrand,
        mu - T,
        mu + T,
        abs_tol=spec.abs_tol,
        rel_tol=spec.rel_tol,
        max_subdivisions=spec.max_subdivisions,
        breakpoints=(mu,),
    )
    tail = exp_tail_bound(lambda u: float(integrand(mu + u)), T) + exp_tail_bound(
        lambda u: float(integrand(mu - u)), T
    )
    total_err = err + tail
    if not (math.isfinite(value) and value > 0.0) or total_err > max(
        spec.abs_tol, spec.rel_tol * abs(value)
    ):
        raise NumericError(
            f"roughness quadrature for {component.target_id} did not converge "
            f"(value {value!r}, error {total_err!r})",
            achieved_tol=total_err,
        )
    if key is not None:
        _ROUGHNESS_CACHE[key] = value
    return value


def _group_components(components):
    """Indices of identical components, keyed by their id string."""
    groups: dict[str, list[int]] = {}
    rep: dict[str, TargetDensity] = {}
    for i, comp in enumerate(components):
        key = comp.target_id if comp.family is not Family.CUSTOM else f"custom@{id(comp)}"
        groups.setdefault(key, []).append(i)
        rep[key] = comp
    return [(np.array(ix, dtype=np.intp), rep[key]) for key, ix in groups.items()]


@dataclass(frozen=True, eq=False)
class ProductTarget:
    """Independent product of scalar targets: a d-dimensional density.

    Construction eagerly verifies that every component has finite
    variance and finite roughness, so downstream predictions never see a
    degenerate component.
    """

    components: tuple[TargetDensity, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ParameterError("a product target needs at least one component")
        object.__setattr__(self, "components", comps)
        variances = np.array([c.variance() for c in comps])
        roughnesses = np.array([roughness(c) for c in comps])
        variances.flags.writeable = False
        roughnesses.flags.writeable = False
        object.__setattr__(self, "_variances", variances)
        object.__setattr__(self, "_roughnesses", roughnesses)
        groups = _group_components(comps)
        object.__setattr__(self, "_groups", groups)
        if len(groups) == 1:
            comp = comps[0]

            def sum_logpdf(x: np.ndarray) -> float:
                return float(np.sum(comp.logpdf(x)))

        else:

            def sum_logpdf(x: np.ndarray) -> float:
                return float(sum(np.sum(c.logpdf(x[ix])) for ix, c in groups))

        object.__setattr__(self, "_sum_logpdf", sum_logpdf)

    @property
    def d(self) -> int:
        return len(self.components)

    @property
    def variances(self) -> np.ndarray:
        """Per-component variances sigma_i^2."""
        return self._variances

    @property
    def roughnesses(self) -> np.ndarray:
        """Per-component roughness constants m_i."""
        return self._roughnesses

    @property
    def mbar(self) -> float:
        """Average roughness; the only target property the limit keeps."""
        return float(np.mean(self._roughnesses))

    @property
    def target_id(self) -> str:
        parts = [f"{comp.target_id}*{len(ix)}" for ix, comp in self._groups]
        return f"product:d={self.d}:" + "|".join(parts)

    def logpdf(self, x: np.ndarray) -> float:
        """Joint log-density sum_i log p_i(x_i) of a d-vector."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,):
            raise ContractError(f"expected a vector of length {self.d}, got shape {x.shape}")
        return self._sum_logpdf(x)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """One exact draw from the product (component by component)."""
        if len(self._groups) == 1:
            return self.components[0].sample(rng, self.d)
        out = np.empty(self.d)
        for ix, comp in self._groups:
            out[ix] = comp.sample(rng, len(ix))
        return out


def predicted_acceptance(mbar: float, ell: float) -> float:
    """Large-d mean acceptance rate 2*Phi(-ell*sqrt(mbar)/2)."""
    if not (mbar > 0.0 and math.isfinite(mbar)):
        raise ParameterError(f"mbar must be positive and finite, got {mbar!r}")
    if not (ell > 0.0 and math.isfinite(ell)):
        raise ParameterError(f"ell must be positive and finite, got {ell!r}")
    return float(2.0 * ndtr(-0.5 * ell * math.sqrt(mbar)))


def efficiency(mbar: float, ell: float) -> float:
    """Efficiency curve h(ell) = ell^2 * predicted_acceptance(mbar, ell)."""
    return ell * ell * predicted_acceptance(mbar, ell)


def optimize_ell(mbar: float) -> tuple[float, float]:
    """Maximize the efficiency curve by golden-section search.

    Returns (ell_star, h_star) on the bracket (0, 20/sqrt(mbar)].  The
    result is cross-checked against the well-known 2.38/sqrt(mbar) rule;
    disagreement beyond 0.01/sqrt(mbar) flags a numerics problem, as does
    a maximizer pinned to a bracket edge.
    """
    if not (mbar > 0.0 and math.isfinite(mbar)):
        raise ParameterError(f"mbar must be positive and finite, got {mbar!r}")
    scale = 1.0 / math.sqrt(mbar)
    a0, b0 = 1e-12 * scale, 20.0 * scale
    a, b = a0, b0
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = efficiency(mbar, c), efficiency(mbar, d)
    while b - a > 1e-12 * scale:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = efficiency(mbar, c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = efficiency(mbar, d)
    ell_star = 0.5 * (a + b)
    if ell_star - a0 < 1e-6 * scale or b0 - ell_star < 1e-6 * scale:
        raise NumericError("efficiency maximizer sits at a bracket edge")
    if abs(ell_star - 2.38 * scale) >= 0.01 * scale:
        raise NumericError(
            f"efficiency maximizer {ell_star!r} disagrees with the "
            f"2.38/sqrt(mbar) rule beyond tolerance"
        )
    return ell_star, efficiency(mbar, ell_star)


@dataclass(frozen=True, eq=False)
class ScalingReport:
    """Predicted versus empirical quantities of one d-dimensional run.

    ``diag_cov_pred[i]`` is sigma_i^2 - (ell^2/2d) * predicted acceptance;
    ``diag_cov_emp`` the per-coordinate empirical lag-1 autocovariances
    and ``diag_cov_se`` their batch-means standard errors (NaN when the
    chain is too short).  ``offdiag_max`` and ``min_eigenvalue`` describe
    the empirical lag-1 cross-covariance matrix (NaN when d > 100, where
    only the diagonal is computed).
    """

    ell: float
    mbar: float
    predicted_acceptance: float
    h: float
    ell_star: float
    empirical_acceptance: float
    diag_cov_pred: np.ndarray
    diag_cov_emp: np.ndarray
    diag_cov_se: np.ndarray
    offdiag_max: float
    min_eigenvalue: float

    def __post_init__(self):
        if not 0.0 < self.predicted_acceptance < 1.0:
            raise ParameterError(
                f"predicted acceptance must lie in (0, 1), got {self.predicted_acceptance!r}"
            )
        if not self.h > 0.0:
            raise ParameterError(f"efficiency value must be positive, got {self.h!r}")


def _lag1_matrix(states: np.ndarray):
    """Empirical lag-1 cross-covariance matrix, accumulated blockwise.

    Uses the grand mean of all states on both sides with 1/(n-1)
    normalization, matching the scalar empirical lag covariance.
    """
    n, d = states.shape
    mean = states.mean(axis=0)
    S = np.zeros((d, d))
    for lo in range(0, n - 1, _BLOCK):
        hi = min(lo + _BLOCK, n - 1)
        S += states[lo:hi].T @ states[lo + 1 : hi + 1]
    sum_a = states[:-1].sum(axis=0)
    sum_b = states[1:].sum(axis=0)
    C = (
        S
        - np.outer(sum_a, mean)
        - np.outer(mean, sum_b)
        + (n - 1) * np.outer(mean, mean)
    ) / (n - 1)
    return C


def _lag1_se(column: np.ndarray) -> float:
    """Batch-means SE of the lag-1 autocovariance from _SE_BATCHES batches."""
    n = len(column)
    length = n // _SE_BATCHES
    trimmed = column[: _SE_BATCHES * length].reshape(_SE_BATCHES, length)
    centered = trimmed - trimmed.mean(axis=1, keepdims=True)
    stats = np.sum(centered[:, :-1] * centered[:, 1:], axis=1) / (length - 1)
    return float(np.std(stats, ddof=1) / math.sqrt(_SE_BATCHES))


def _lag1_diagonal(states: np.ndarray) -> np.ndarray:
    """Per-coordinate lag-1 autocovariances without the d x d matrix."""
    n = states.shape[0]
    mean = states.mean(axis=0)
    S = np.zeros(states.shape[1])
    for lo in range(0, n - 1, _BLOCK):
        hi = min(lo + _BLOCK, n - 1)
        S += np.sum(states[lo:hi] * states[lo + 1 : hi + 1], axis=0)
    sum_a = states[:-1].sum(axis=0)
    sum_b = states[1:].sum(axis=0)
    return (S - mean * (sum_a + sum_b) + (n - 1) * mean * mean) / (n - 1)


def run_highdim(
    product: ProductTarget,
    ell: float,
    cfg: RunConfig,
    *,
    stream: int = 0,
) -> tuple[Chain, ScalingReport]:
    """Run d-dimensional random-walk Metropolis and compare with theory.

    Increments are N(0, (ell^2/d) I_d).  Returns the post-burn-in vector
    chain and a ScalingReport with the predicted acceptance, the
    efficiency value, the diagonal lag-1 covariance expansion, and the
    empirical counterparts.
    """
    if product.d < 2:
        raise ContractError(f"dimension scaling needs d >= 2, got d={product.d}")
    if not (ell > 0.0 and math.isfinite(ell)):
        raise ParameterError(f"ell must be positive and finite, got {ell!r}")
    d = product.d
    step = ell / math.sqrt(d)
    rng = derive_rng(cfg.seed, stream)
    sum_logpdf = product._sum_logpdf
    if isinstance(cfg.init, FixedPoint):
        x = np.full(d, float(cfg.init.x0))
    else:
        x = product.sample(rng)
    lx = sum_logpdf(x)
    if not math.isfinite(lx):
        raise InvalidStateError(f"initial state has log-density {lx!r}")

    n = cfg.n_steps
    burn = cfg.burn_in
    total = burn + n
    states = np.empty((n, d))
    flags = np.empty(n, dtype=bool)
    t = 0
    while t < total:
        block = min(_BLOCK, total - t)
        z = rng.standard_normal((block, d))
        z *= step
        log_u = np.log(rng.random(block))
        for i in range(block):
            y = x + z[i]
            ly = sum_logpdf(y)
            acc = ly - lx > log_u[i]
            if acc:
                x = y
                lx = ly
            k = t + i - burn
            if k >= 0:
                states[k] = x
                flags[k] = acc
        t += block

    chain = Chain(
        states=states,
        accepted=flags,
        seed=(cfg.seed ^ stream) & _MASK64,
        target_id=product.target_id,
        kernel_id=f"rw-gauss-iso:ell={ell!r},d={d}",
        burn_in=burn,
    )

    mbar = product.mbar
    pred = predicted_acceptance(mbar, ell)
    diag_pred = product.variances - (ell * ell / (2.0 * d)) * pred
    if d <= _CROSSCOV_MAX_D:
        C = _lag1_matrix(states)
        diag_emp = np.diag(C).copy()
        off = C - np.diag(np.diag(C))
        offdiag_max = float(np.max(np.abs(off)))
        min_eigenvalue = float(np.linalg.eigvalsh(0.5 * (C + C.T)).min())
    else:
        diag_emp = _lag1_diagonal(states)
        offdiag_max = math.nan
        min_eigenvalue = math.nan
    if n >= _BATCH_SE_MIN_N:
        diag_se = np.array([_lag1_se(states[:, i]) for i in range(d)])
    else:
        diag_se = np.full(d, math.nan)

    report = ScalingReport(
        ell=float(ell),
        mbar=mbar,
        predicted_acceptance=pred,
        h=efficiency(mbar, ell),
        ell_star=2.38 / math.sqrt(mbar),
        empirical_acceptance=chain.mean_acceptance(),
        diag_cov_pred=diag_pred,
        diag_cov_emp=diag_emp,
        diag_cov_se=diag_se,
        offdiag_max=offdiag_max,
        min_eigenvalue=min_eigenvalue,
    )
    return chain, report
