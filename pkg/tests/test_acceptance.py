"""Acceptance gate: one numbered pass/fail line per criterion.

Every stochastic criterion runs a fully frozen recipe (seed, stream
layout, burn-in, chain length), so reruns are deterministic.  Criterion
numbering follows the project checklist; criterion 12 belongs to the
figure-rendering package and is exercised by its own test suite.
"""
import csv
import math
from pathlib import Path

import numpy as np
import pytest
from scipy import signal

from mhcov import (
    FlipGaussianKernel,
    ProductTarget,
    RandomWalkKernel,
    RunConfig,
    Statistic,
    batch_se,
    bimodal_rw,
    cov_explicit1d,
    cov_general,
    covariance_at_design,
    derive_rng,
    empirical_lag_cov,
    ess,
    gaussian,
    gaussian_rw,
    ghs,
    logistic,
    run_chain,
    run_highdim,
    solve_design,
)
from mhcov.quadrature import adaptive_gk

GAUSS_HALF_MARGIN = 0.5 - math.exp(-0.5) / math.sqrt(2.0 * math.pi)  # 0.2580292754808566
ACC_AT_OPT = 0.23404639204621747  # 2*Phi(-1.19)


def report(num, ok: bool, detail: str):
    print(f"CRITERION {num}: {'PASS' if ok else 'FAIL'} — {detail}")
    assert ok, f"criterion {num}: {detail}"


def test_criterion_01_cross_formula_equality(cov_grid):
    cells, elapsed = cov_grid
    worst = max(abs(c.general.value - c.explicit.value) for c in cells)
    ok = worst < 1e-6 and elapsed < 60.0 and len(cells) == 12
    report(1, ok, f"12 target x kernel pairs, max |general - explicit| = {worst:.2e}, "
                  f"quadrature time {elapsed:.1f}s < 60s")


def test_criterion_02_positivity_below_variance(cov_grid):
    cells, _ = cov_grid
    lows = [min(c.general.value, c.explicit.value) for c in cells]
    highs = [max(c.general.value, c.explicit.value) / c.target.variance() for c in cells]
    ok = min(lows) > 0.0 and max(highs) < 1.0
    report(2, ok, f"all 12 covariances in (0, sigma^2): min = {min(lows):.4f}, "
                  f"max/sigma^2 = {max(highs):.4f}")


def test_criterion_03_translation_invariance():
    kernel = RandomWalkKernel(gaussian_rw(1.0))
    vals = [cov_general(gaussian(mu=mu), kernel).value for mu in (0.0, 3.0, -7.0)]
    worst = max(abs(a - b) for i, a in enumerate(vals) for b in vals[i + 1:])
    report(3, worst < 1e-8,
           f"Gaussian targets at mu = 0, 3, -7: max pairwise |diff| = {worst:.2e} < 1e-8")


def test_criterion_04_gaussian_increment_margin():
    margins = [gaussian_rw(s).half_bound_margin() for s in (0.5, 1.0, 2.38, 8.0)]
    ok = all(m > 0.0 for m in margins) and all(
        abs(m - GAUSS_HALF_MARGIN) < 1e-4 for m in margins
    )
    report("4 (unimodal class)", ok,
           f"Gaussian increments: margin = {margins[0]:.6f} ~ 0.25803 at every scale, "
           f"positive as the bound requires for unimodal increment densities")


@pytest.mark.xfail(
    strict=True,
    reason="CRITERION 4 (universal claim): FAIL — the half bound sup|z*phi(z)| < 1/2 "
    "is claimed for every symmetric increment density, but the suite's bimodal "
    "increments at sigma_q/x* = 0.2 sit above 1/2 (margin ~ -0.52): the bound's "
    "derivation needs unimodality.  Kept failing on purpose; see the design notes.",
)
def test_criterion_04_universal_half_bound_claim():
    margins = {}
    for target in (gaussian(), logistic(), ghs(alpha=1.5)):
        x_star = solve_design(target).x_star
        for ratio in (0.2, 0.4):
            inc = bimodal_rw(x_star, ratio * x_star)
            margins[inc.increment_id] = inc.half_bound_margin()
    detail = ", ".join(f"{k}: {v:.4f}" for k, v in margins.items())
    report("4 (universal claim)", all(m > 0.0 for m in margins.values()),
           f"bimodal suite increments violate the bound: {detail}")


def test_criterion_05_variance_identity(targets3):
    worst = 0.0
    for target in targets3:
        T = target.truncation_radius()
        moment, _ = adaptive_gk(lambda t: 2.0 * t * t * target.pdf(target.mu + t), 0.0, T)
        tail, _ = adaptive_gk(lambda t: 4.0 * t * target.sf_centered(t), 0.0, T)
        worst = max(worst, abs(moment - tail))
    report(5, worst < 1e-8,
           f"2*int t^2 pi dt vs 4*int t*[1 - Pi] dt: max |diff| = {worst:.2e} < 1e-8 "
           f"for Gaussian, Logistic, GHS(1.5)")


def test_criterion_06_design_correctness(targets3, designs):
    focs, approach_ok, within = [], True, []
    for target in targets3:
        d = designs[target.target_id]
        focs.append(d.foc_residual)
        from mhcov import design_functional

        vals = [
            design_functional(target, bimodal_rw(d.x_star, r * d.x_star))
            for r in (0.4, 0.2, 0.1, 0.05)
        ]
        approach_ok &= all(v < d.w_max for v in vals) and vals == sorted(vals)
        cov = covariance_at_design(target, 0.05 * d.x_star, design=d)
        within.append((cov - d.cov_infimum) / d.cov_infimum)
    ok = max(focs) < 1e-10 and approach_ok and all(0.0 < r < 0.02 for r in within)
    report(6, ok, f"foc residual <= {max(focs):.1e}; J increases toward w_max over "
                  f"sigma_q/x* = 0.4..0.05 staying strictly below; covariance at 0.05*x* "
                  f"within {100 * max(within):.2f}% of the infimum")


def test_criterion_07_theory_vs_monte_carlo(targets3):
    import time

    started = time.perf_counter()
    stream = 0
    worst_z, n_pairs = 0.0, 0
    for target in targets3:
        x_star = solve_design(target).x_star
        incs = [gaussian_rw(0.5), gaussian_rw(1.0), gaussian_rw(2.38),
                bimodal_rw(x_star, 0.2 * x_star)]
        for inc in incs:
            quad = cov_explicit1d(target, inc).value
            emps, ses = [], []
            for _ in range(8):
                chain = run_chain(
                    target, RandomWalkKernel(inc),
                    RunConfig(n_steps=200_000, burn_in=2_000, seed=0), stream=stream,
                )
                stream += 1
                emps.append(empirical_lag_cov(chain, 1))
                ses.append(batch_se(chain, Statistic.LAG1_COV))
            se = math.sqrt(sum(s * s for s in ses)) / 8.0
            worst_z = max(worst_z, abs(float(np.mean(emps)) - quad) / se)
            n_pairs += 1
    elapsed = time.perf_counter() - started
    ok = worst_z < 3.0 and elapsed < 300.0 and n_pairs == 12
    report(7, ok, f"12 pairs x 8 replicates of N=2e5: worst |emp - quad| = "
                  f"{worst_z:.2f} batch SEs (< 3); runtime {elapsed:.0f}s < 300s")


def test_criterion_08_flip_kernel_negative_covariance():
    target = gaussian()
    stream = 0
    rows = []
    for c in (0.25, 0.5, 0.75):
        kernel = FlipGaussianKernel(c=c, var=2.0)
        quad = cov_general(target, kernel).value
        emps, ses = [], []
        for _ in range(8):
            chain = run_chain(
                target, kernel, RunConfig(n_steps=200_000, burn_in=2_000, seed=0),
                stream=stream,
            )
            stream += 1
            emps.append(empirical_lag_cov(chain, 1))
            ses.append(batch_se(chain, Statistic.LAG1_COV))
        est = float(np.mean(emps))
        se = math.sqrt(sum(s * s for s in ses)) / 8.0
        rows.append((c, quad, est, abs(est - quad) / se))
    ok = all(q < 0.0 and e < 0.0 and z < 3.0 for _, q, e, z in rows)
    detail = "; ".join(f"c={c}: quad={q:.5f}, emp={e:.5f}, z={z:.2f}" for c, q, e, z in rows)
    report(8, ok, f"both routes negative and within 3 SE — {detail}")


def test_criterion_09_high_dimensional_rule():
    prod50 = ProductTarget((gaussian(),) * 50)

    _, rep = run_highdim(prod50, 2.38, RunConfig(n_steps=500_000, burn_in=5_000, seed=2))
    acc_ok = 0.214 <= rep.empirical_acceptance <= 0.254
    z = np.abs(rep.diag_cov_emp - rep.diag_cov_pred) / rep.diag_cov_se
    diag_ok = float(np.max(z)) < 3.0

    ells = (1.0, 1.5, 2.0, 2.38, 3.0, 4.0)
    mean_ess = []
    for i, ell in enumerate(ells):
        chain, _ = run_highdim(
            prod50, ell, RunConfig(n_steps=200_000, burn_in=5_000, seed=11), stream=i
        )
        mean_ess.append(float(np.mean([ess(chain.states[:, j]).ess for j in range(50)])))
    peak = int(np.argmax(mean_ess))
    peak_ok = peak in (2, 3, 4)  # 2.38 plus/minus one grid step

    gaps = []
    for d in (5, 15, 50):
        _, rep_d = run_highdim(
            ProductTarget((gaussian(),) * d), 2.38,
            RunConfig(n_steps=500_000, burn_in=5_000, seed=5),
        )
        gaps.append(abs(rep_d.empirical_acceptance - ACC_AT_OPT))
    trend_ok = gaps[0] > gaps[1] > gaps[2]

    ok = acc_ok and diag_ok and peak_ok and trend_ok
    report(9, ok, f"d=50, l=2.38, N=5e5: acceptance {rep.empirical_acceptance:.4f} in "
                  f"[0.214, 0.254]; diagonal within {float(np.max(z)):.2f} SE; ESS peak at "
                  f"l={ells[peak]}; acceptance gap over d=5,15,50: "
                  + ", ".join(f"{g:.4f}" for g in gaps) + " (decreasing)")


def test_criterion_10_ess_estimator_calibration():
    n_iid = 40_000
    iid_ratio = ess(derive_rng(0, 7).standard_normal(n_iid)).ess / n_iid

    n_ar = 200_000
    noise = derive_rng(0, 0).standard_normal(n_ar + 500)
    ar = signal.lfilter([1.0], [1.0, -0.5], noise)[500:]
    ar_err = abs(ess(ar).ess - n_ar / 3.0) / (n_ar / 3.0)

    ok = 0.9 <= iid_ratio <= 1.1 and ar_err < 0.10
    report(10, ok, f"iid ESS/N = {iid_ratio:.4f} in [0.9, 1.1]; "
                   f"AR(1, a=0.5) ESS within {100 * ar_err:.1f}% of N/3")


def _read_sweep(path: Path):
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    return list(reader)


def _bimodal_ratio(kernel_id: str) -> float:
    params = dict(item.split("=") for item in kernel_id.split(":", 1)[1].split(","))
    return float(params["sigma"]) / float(params["xstar"])


def test_criterion_11_bimodal_ess_advantage(e1_dir):
    advantage_ok, parity_ok, notes = True, True, []
    for slug in ("gauss", "logistic", "ghs-alpha-1"):
        rows = _read_sweep(e1_dir / f"ess_sweep_{slug}.csv")
        gauss_pts = sorted(
            (float(r["acceptance"]), float(r["ess"]))
            for r in rows
            if r["kernel"].startswith("rw-gauss:")
        )
        xs = [a for a, _ in gauss_pts]
        ys = [e for _, e in gauss_pts]
        checked = 0
        for r in rows:
            if not r["kernel"].startswith("rw-bimodal:"):
                continue
            if abs(_bimodal_ratio(r["kernel"]) - 0.2) > 0.01:
                continue
            acc, e = float(r["acceptance"]), float(r["ess"])
            baseline = float(np.interp(acc, xs, ys))
            if 0.1 <= acc <= 0.35:
                advantage_ok &= e > baseline
                checked += 1
                notes.append(f"{slug}@{acc:.2f}: {e / baseline:.2f}x")
            elif 0.45 <= acc <= 0.65:
                parity_ok &= abs(e / baseline - 1.0) <= 0.25
        assert checked > 0, f"no ratio-0.2 points landed in [0.1, 0.35] for {slug}"
    ok = advantage_ok and parity_ok
    report(11, ok, "narrow-bimodal ESS beats width-matched Gaussian ESS at matched "
                   "acceptance in [0.1, 0.35] (" + ", ".join(notes) + "); within 25% of "
                   "parity on [0.45, 0.65] where the advantage is predicted to fade")
