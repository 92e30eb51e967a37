"""Metropolis-Hastings chain engine.

``run_chain`` produces stationary-regime sample paths: propose, accept
with probability min(1, pi(y) q(x|y) / (pi(x) q(y|x))), record the state
and the acceptance flag.  Everything is computed in log space, all
randomness comes from a counter-based Philox generator, and replicate
chain ``i`` uses the stream key ``seed XOR i`` so runs are reproducible
bit for bit and replicates are independent.

Chains can be serialized to a little-endian binary column file or to CSV;
both formats are documented in the README.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .densities import TargetDensity
from .errors import (
    AtomicMeasureError,
    ContractError,
    InvalidStateError,
    ParameterError,
)
from .proposals import (
    FlipGaussianKernel,
    IncrementKind,
    ProposalKernel,
    RandomWalkKernel,
)

_MAGIC = b"MHCHAIN1"
_FORMAT_VERSION = 1
_MASK64 = (1 << 64) - 1


def derive_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Generator for replicate ``stream`` of a run seeded with ``seed``.

    Stream-derivation rule: the Philox key is ``(seed XOR stream)`` reduced
    to 64 bits.  Distinct streams give statistically independent
    counter-based sequences.
    """
    return np.random.Generator(np.random.Philox(key=(seed ^ stream) & _MASK64))


@dataclass(frozen=True)
class FromTarget:
    """Start the chain with an exact draw from the target (stationary start)."""


@dataclass(frozen=True)
class FixedPoint:
    """Start the chain at a fixed state; pair with burn_in for stationarity."""

    x0: float


Init = FromTarget | FixedPoint


@dataclass(frozen=True)
class RunConfig:
    """Length, burn-in, seed, and initialization of one chain run."""

    n_steps: int
    burn_in: int = 0
    seed: int = 0
    init: Init = FromTarget()

    def __post_init__(self):
        if self.n_steps < 1:
            raise ParameterError(f"n_steps must be >= 1, got {self.n_steps}")
        if self.burn_in < 0:
            raise ParameterError(f"burn_in must be >= 0, got {self.burn_in}")


@dataclass(frozen=True, eq=False)
class Chain:
    """Post-burn-in sample path with acceptance bookkeeping.

    ``states`` has shape (n,) for scalar chains or (n, d) for product
    targets; ``accepted[t]`` marks whether step t's proposal was taken
    (when False, ``states[t]`` equals ``states[t-1]`` exactly).  ``seed``
    is the effective stream key that reproduces this exact chain.
    """

    states: np.ndarray
    accepted: np.ndarray
    seed: int
    target_id: str
    kernel_id: str
    burn_in: int = 0

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        accepted = np.asarray(self.accepted, dtype=bool)
        if len(states) != len(accepted):
            raise ParameterError("states and accepted flags must have equal length")
        if len(states) == 0:
            raise ParameterError("a chain must contain at least one state")
        states.flags.writeable = False
        accepted.flags.writeable = False
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "accepted", accepted)

    @property
    def n(self) -> int:
        return len(self.states)

    @property
    def d(self) -> int:
        return 1 if self.states.ndim == 1 else self.states.shape[1]

    def mean_acceptance(self) -> float:
        """Fraction of accepted steps."""
        return float(np.mean(self.accepted))


def mean_acceptance(chain: Chain) -> float:
    """Fraction of accepted steps of ``chain``."""
    return chain.mean_acceptance()


def acceptance_prob(
    target: TargetDensity, kernel: ProposalKernel, x: float, y
) -> np.ndarray:
    """Acceptance probability alpha(x, y), vectorized in ``y``.

    For symmetric random-walk kernels the proposal ratio is exactly 1 and
    is skipped; otherwise the full log ratio
    log pi(y) + log q(x|y) - log pi(x) - log q(y|x) is used.
    """
    lx = float(target.logpdf(x))
    if not math.isfinite(lx):
        raise InvalidStateError(f"current state x={x!r} has zero target density")
    log_ratio = target.logpdf(y) - lx
    if not kernel.is_symmetric_rw:
        log_ratio = log_ratio + kernel.log_density(y, x) - kernel.log_density(x, y)
    return np.exp(np.minimum(0.0, log_ratio))


def _initial_state(target: TargetDensity, init: Init, rng: np.random.Generator) -> float:
    if isinstance(init, FixedPoint):
        x0 = float(init.x0)
        if not math.isfinite(float(target.logpdf(x0))):
            raise InvalidStateError(f"fixed initial state {x0!r} has zero target density")
        return x0
    return float(target.sample(rng, 1)[0])


def run_chain(
    target: TargetDensity,
    kernel: ProposalKernel,
    cfg: RunConfig,
    *,
    stream: int = 0,
    allow_atomic: bool = False,
) -> Chain:
    """Run one Metropolis-Hastings chain and return its post-burn-in path.

    ``stream`` selects the replicate RNG stream (seed XOR stream rule).
    Sampling the atomic two-point proposal violates irreducibility on a
    continuous target, so it is refused unless ``allow_atomic`` is set.
    """
    if isinstance(kernel, RandomWalkKernel):
        if kernel.increment.kind is IncrementKind.TWO_POINT and not allow_atomic:
            raise AtomicMeasureError(
                "sampling the atomic two-point proposal needs allow_atomic=True "
                "(the chain is reducible: it lives on a two-point lattice)"
            )
    elif not isinstance(kernel, FlipGaussianKernel):
        raise ContractError(f"unsupported kernel type {type(kernel).__name__}")

    rng = derive_rng(cfg.seed, stream)
    x = _initial_state(target, cfg.init, rng)
    total = cfg.burn_in + cfg.n_steps
    log_pdf = target._scalar_logpdf()
    log_u = np.log(rng.random(total)).tolist()

    states: list[float] = []
    flags: list[bool] = []
    lx = log_pdf(x)
    append_state = states.append
    append_flag = flags.append

    if isinstance(kernel, RandomWalkKernel):
        steps = kernel.increment.sample(rng, total).tolist()
        for t in range(total):
            y = x + steps[t]
            ly = log_pdf(y)
            accept = ly - lx > log_u[t]
            if accept:
                x, lx = y, ly
            append_state(x)
            append_flag(accept)
    else:
        c = kernel.c
        var = kernel.var
        noise = (math.sqrt(var) * np.asarray(rng.standard_normal(total))).tolist()
        half_inv_var = 0.5 / var
        for t in range(total):
            y = -c * x + noise[t]
            ly = log_pdf(y)
            # proposal log ratio log q(x|y) - log q(y|x); constants cancel
            xy = x + c * y
            yx = y + c * x
            accept = ly - lx + half_inv_var * (yx * yx - xy * xy) > log_u[t]
            if accept:
                x, lx = y, ly
            append_state(x)
            append_flag(accept)

    return Chain(
        states=np.array(states[cfg.burn_in:], dtype=float),
        accepted=np.array(flags[cfg.burn_in:], dtype=bool),
        seed=(cfg.seed ^ stream) & _MASK64,
        target_id=target.target_id,
        kernel_id=kernel.kernel_id,
        burn_in=cfg.burn_in,
    )


def replicate_chains(
    target: TargetDensity,
    kernel: ProposalKernel,
    cfg: RunConfig,
    n_replicates: int,
    *,
    allow_atomic: bool = False,
) -> list[Chain]:
    """Independent replicate chains on streams 0 .. n_replicates - 1.

    Each replicate is a pure function of (cfg.seed, stream), so the list is
    identical whether replicates run sequentially or on a worker pool.
    """
    if n_replicates < 1:
        raise ParameterError(f"n_replicates must be >= 1, got {n_replicates}")
    return [
        run_chain(target, kernel, cfg, stream=i, allow_atomic=allow_atomic)
        for i in range(n_replicates)
    ]


# ----------------------------------------------------------------- chain I/O
def write_chain_binary(chain: Chain, path) -> None:
    """Write a chain as a little-endian binary column file.

    Layout: magic ``MHCHAIN1``; u32 version; u32 d; u64 n; u64 seed;
    u64 burn_in; u16-length-prefixed UTF-8 target and kernel ids; then
    n*d float64 states (row major) and n uint8 acceptance flags.
    """
    states = chain.states if chain.states.ndim == 2 else chain.states[:, None]
    tid = chain.target_id.encode("utf-8")
    kid = chain.kernel_id.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IIQQQ", _FORMAT_VERSION, chain.d, chain.n,
                             chain.seed & _MASK64, chain.burn_in))
        fh.write(struct.pack("<H", len(tid)))
        fh.write(tid)
        fh.write(struct.pack("<H", len(kid)))
        fh.write(kid)
        fh.write(states.astype("<f8").tobytes())
        fh.write(chain.accepted.astype(np.uint8).tobytes())


def read_chain_binary(path) -> Chain:
    """Read a chain written by :func:`write_chain_binary`."""
    with open(path, "rb") as fh:
        if fh.read(len(_MAGIC)) != _MAGIC:
            raise ParameterError(f"{path} is not a chain file (bad magic)")
        header = fh.read(struct.calcsize("<IIQQQ"))
        version, d, n, seed, burn_in = struct.unpack("<IIQQQ", header)
        if version != _FORMAT_VERSION:
            raise ParameterError(f"unsupported chain format version {version}")
        (tlen,) = struct.unpack("<H", fh.read(2))
        target_id = fh.read(tlen).decode("utf-8")
        (klen,) = struct.unpack("<H", fh.read(2))
        kernel_id = fh.read(klen).decode("utf-8")
        states = np.frombuffer(fh.read(8 * n * d), dtype="<f8").reshape(n, d).copy()
        accepted = np.frombuffer(fh.read(n), dtype=np.uint8).astype(bool)
    return Chain(
        states=states[:, 0] if d == 1 else states,
        accepted=accepted,
        seed=seed,
        target_id=target_id,
        kernel_id=kernel_id,
        burn_in=burn_in,
    )


def write_chain_csv(chain: Chain, path) -> None:
    """Write a chain as CSV: ``t,state,accepted`` (state_0..state_{d-1}
    columns for vector chains)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if chain.states.ndim == 1:
            fh.write("t,state,accepted\n")
            for t, (s, a) in enumerate(zip(chain.states.tolist(), chain.accepted)):
                fh.write(f"{t},{s!r},{int(a)}\n")
        else:
            cols = ",".join(f"state_{j}" for j in range(chain.d))
            fh.write(f"t,{cols},accepted\n")
            for t in range(chain.n):
                row = ",".join(repr(v) for v in chain.states[t].tolist())
                fh.write(f"{t},{row},{int(chain.accepted[t])}\n")
