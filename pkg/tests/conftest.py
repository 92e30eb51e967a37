"""Shared fixtures: the canonical target/kernel grid and one full E1 run.

Expensive artifacts (quadrature grid, the ESS-vs-acceptance sweep) are
session-scoped so the acceptance tests and module tests share them.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import pytest

from mhcov import (
    CovReport,
    DesignResult,
    RandomWalkKernel,
    bimodal_rw,
    cov_explicit1d,
    cov_general,
    gaussian,
    ghs,
    logistic,
    parse_kernel_spec,
    solve_design,
)

GRID_SIGMAS = (0.5, 1.0, 2.38)
BIMODAL_RATIO = 0.2


@dataclass(frozen=True)
class GridCell:
    """One (target, kernel) pair of the canonical grid with both routes."""

    target: object
    kernel: object
    general: CovReport
    explicit: CovReport


@pytest.fixture(scope="session")
def targets3():
    """The three analytic families every table in the suite sweeps."""
    return (gaussian(), logistic(), ghs(alpha=1.5))


@pytest.fixture(scope="session")
def designs(targets3) -> dict[str, DesignResult]:
    return {t.target_id: solve_design(t) for t in targets3}


@pytest.fixture(scope="session")
def cov_grid(targets3, designs):
    """All 12 grid covariances via both quadrature routes, plus wall time.

    Returns (cells, elapsed_seconds); the timing covers only the quadrature
    calls so the runtime budget assertion measures what it claims to.
    """
    cells = []
    start = time.perf_counter()
    for target in targets3:
        x_star = designs[target.target_id].x_star
        kernels = [parse_kernel_spec(f"rw-gauss:sigma={s}") for s in GRID_SIGMAS]
        kernels.append(
            RandomWalkKernel(bimodal_rw(x_star=x_star, sigma_q=BIMODAL_RATIO * x_star))
        )
        for kernel in kernels:
            cells.append(
                GridCell(
                    target=target,
                    kernel=kernel,
                    general=cov_general(target, kernel),
                    explicit=cov_explicit1d(target, kernel.increment),
                )
            )
    elapsed = time.perf_counter() - start
    return cells, elapsed


@pytest.fixture(scope="session")
def e1_dir(tmp_path_factory):
    """One ESS-vs-acceptance sweep (all three targets) at reduced length.

    100k steps and 4 replicates keep the sweep under half a minute while
    leaving the acceptance/ESS landscape well resolved; the qualitative
    trend assertions have wide margins at this size.
    """
    from mhcov.cli import Experiment, ExperimentConfig, run_experiment

    out = tmp_path_factory.mktemp("e1")
    cfg = ExperimentConfig(
        experiment=Experiment.E1_ESS_VS_ACCEPTANCE,
        n_steps=100_000,
        replicates=4,
        seed=0,
        out_dir=str(out),
    )
    run_experiment(cfg)
    return out
