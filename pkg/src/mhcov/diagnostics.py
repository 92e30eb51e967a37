"""Empirical efficiency diagnostics.

Autocorrelation function, effective sample size
ESS = N / (1 + 2 sum rho_k), and batch-means standard errors.  The
autocorrelation sum is truncated by Geyer's initial-positive-sequence
rule by default: lag-pair sums Gamma_m = rho_{2m} + rho_{2m+1} of a
reversible chain are positive and decreasing, so summation stops before
the first non-positive pair.  A fixed cutoff is kept for reproducing
naive estimates.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DegenerateChainError
from .sampler import Chain

_FFT_THRESHOLD = 100


class EssMethod(enum.Enum):
    """Truncation rule for the autocorrelation sum."""

    GEYER_INITIAL_POSITIVE = "geyer-initial-positive"
    FIXED_CUTOFF = "fixed-cutoff"


class Statistic(enum.Enum):
    """Chain statistic whose standard error batch_se estimates."""

    MEAN = "mean"
    LAG1_COV = "lag1-cov"


@dataclass(frozen=True, eq=False)
class EssReport:
    """Effective sample size with the autocorrelations that produced it.

    ``ess`` equals n / (1 + 2 sum_{k=1}^{K} rho[k]) exactly for the
    reported ``rho`` and ``K``.  For positively correlated chains
    ess <= n up to estimator noise; strongly antithetic chains (negative
    lag-1 correlation) can legitimately exceed n.
    """

    n: int
    ess: float
    rho: np.ndarray
    K: int
    acceptance: float
    method: EssMethod


def _scalar_states(chain) -> np.ndarray:
    states = chain.states if isinstance(chain, Chain) else np.asarray(chain, dtype=float)
    if states.ndim != 1:
        raise ContractError("diagnostics operate on scalar chains; pass one coordinate at a time")
    return states


def _autocov(states: np.ndarray, K: int) -> np.ndarray:
    """Autocovariances gamma_0..gamma_K with the 1/(n-k) normalization."""
    n = len(states)
    d = states - states.mean()
    if K > _FFT_THRESHOLD:
        m = 1 << (2 * n - 1).bit_length()
        f = np.fft.rfft(d, m)
        raw = np.fft.irfft(f * np.conj(f), m)[: K + 1]
    else:
        raw = np.array([float(d[: n - k] @ d[k:]) for k in range(K + 1)])
    return raw / (n - np.arange(K + 1))


def autocorr(chain, K: int) -> np.ndarray:
    """Lag-0..K autocorrelations of a chain (or 1-D array of states)."""
    states = _scalar_states(chain)
    n = len(states)
    if K < 0:
        raise ContractError(f"autocorrelation lag bound must be >= 0, got {K}")
    if n <= K + 1:
        raise ContractError(f"chain of length {n} is too short for lags up to {K}")
    gamma = _autocov(states, K)
    if gamma[0] <= 0.0:
        raise DegenerateChainError("chain has zero variance; autocorrelation is undefined")
    rho = gamma / gamma[0]
    rho[0] = 1.0
    return rho


def ess(
    chain,
    method: EssMethod = EssMethod.GEYER_INITIAL_POSITIVE,
    K: int | None = None,
) -> EssReport:
    """Effective sample size of a scalar chain.

    With the default Geyer rule the truncation lag is K = 2M + 1 where M
    indexes the last strictly positive initial pair sum
    rho_{2m} + rho_{2m+1}; K is capped below n/2.  With FIXED_CUTOFF the
    caller supplies K.
    """
    states = _scalar_states(chain)
    n = len(states)
    acceptance = chain.mean_acceptance() if isinstance(chain, Chain) else math.nan

    if method is EssMethod.FIXED_CUTOFF:
        if K is None:
            raise ContractError("FIXED_CUTOFF needs an explicit K")
        rho = autocorr(states, K)
    else:
        if K is not None:
            raise ContractError("the Geyer rule chooses K itself; do not pass one")
        k_cap = max(1, n // 2 - 1)
        rho = autocorr(states, k_cap)
        pairs = rho[: 2 * ((k_cap + 1) // 2)].reshape(-1, 2).sum(axis=1)
        nonpos = np.nonzero(pairs <= 0.0)[0]
        m_last = (int(nonpos[0]) - 1) if nonpos.size else (len(pairs) - 1)
        K = max(1, 2 * m_last + 1)
        rho = rho[: K + 1]

    value = n / (1.0 + 2.0 * float(np.sum(rho[1:])))
    if not (value > 0.0 and math.isfinite(value)):
        raise DegenerateChainError(f"effective sample size came out non-positive ({value!r})")
    return EssReport(n=n, ess=value, rho=rho, K=K, acceptance=acceptance, method=method)


def batch_se(chain, statistic: Statistic = Statistic.MEAN) -> float:
    """Batch-means standard error with floor(sqrt(n)) non-overlapping batches.

    Gives theory-vs-simulation comparisons an honest tolerance that accounts
    for autocorrelation.  Requires n >= 10^4 so at least 100 batches exist.
    """
    states = _scalar_states(chain)
    n = len(states)
    if n < 10_000:
        raise ContractError(f"batch_se needs at least 10^4 samples, got {n}")
    n_batches = math.isqrt(n)
    length = n // n_batches
    trimmed = states[: n_batches * length].reshape(n_batches, length)
    if statistic is Statistic.MEAN:
        stats = trimmed.mean(axis=1)
    else:
        centered = trimmed - trimmed.mean(axis=1, keepdims=True)
        stats = np.sum(centered[:, :-1] * centered[:, 1:], axis=1) / (length - 1)
    return float(np.std(stats, ddof=1) / math.sqrt(n_batches))
