"""Command-line interface running the package's experiments end to end.

Subcommands
-----------
theory-cov      covariance table across targets x kernels x formulas
design          optimal two-point design report per target (JSON)
sample          run one chain and write it to disk
ess-sweep       ESS versus acceptance across kernel families (per target)
sigma-sweep     lag-1 correlation versus sigma_q approaching the design limit
hist            histograms of sampled chains against exact pdfs
counterexample  negative covariance of the state-flipping kernel
highdim         dimension-scaling runs over a grid of step parameters

All tabular output is CSV with comment headers declaring the schema
version and a hash of the generating configuration; scalar reports are
JSON.  Reruns with the same configuration and seed are byte-identical
except for the ``# generated=`` timestamp line (and the wall-clock
timing file, whose payload is wall-clock time by design).
"""

from __future__ import annotations

import argparse
import csv
import enum
import hashlib
import json
import math
import re
import sys
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .densities import TargetDensity, gaussian, parse_target_spec
from .design import DesignResult, solve_design
from .diagnostics import ess
from .errors import MhcovError, ParameterError
from .highdim import ProductTarget, run_highdim
from .proposals import (
    FlipGaussianKernel,
    IncrementKind,
    ProposalKernel,
    RandomWalkKernel,
    bimodal_rw,
    gaussian_rw,
    parse_kernel_spec,
)
from .sampler import RunConfig, run_chain, write_chain_binary, write_chain_csv
from .theory import Formula, cov_explicit1d, cov_general, cov_symrw, empirical_lag_cov

_SCHEMA_VERSION = 1

_DEFAULT_THEORY_TARGETS = ("gauss", "logistic", "ghs:alpha=1.5")
_DEFAULT_THEORY_KERNELS = (
    "rw-gauss:sigma=0.5",
    "rw-gauss:sigma=1",
    "rw-gauss:sigma=2.38",
    "rw-bimodal-design:ratio=0.2",
)
_DEFAULT_DESIGN_TARGETS = ("gauss", "logistic", "ghs:alpha=1.5")

_E1_TARGETS = ("gauss", "logistic", "ghs:alpha=1")
_E1_GAUSS_SIGMAS = (0.3, 0.8, 1.5, 2.38, 4.0, 8.0, 20.0)
_E1_RATIOS = (0.2, 0.4)
# Multiplicative scale applied to (x_star, sigma_q) jointly so each bimodal
# family traverses the acceptance-rate axis at a fixed sigma_q/x_star ratio.
_E1_SCALES = (0.15, 0.3, 0.5, 0.75, 1.0, 1.5, 2.5)

_E2_TARGET = "ghs:alpha=1.5"
_E2_RATIOS = (0.4, 0.3, 0.2, 0.15, 0.1, 0.075, 0.05)

_E3_TARGETS = ("gauss", "logistic:mu=3", "ghs:alpha=1,mu=-7")
_E3_RATIO = 0.4
_E3_NBINS = 40
_E3_RANGE_SIGMAS = 4.0

_E4_CS = (0.25, 0.5, 0.75)

_E5_DIM = 50
_E5_ELLS = (1.0, 1.5, 2.0, 2.38, 3.0, 4.0)


class Experiment(enum.Enum):
    """Experiments run_experiment can dispatch."""

    E1_ESS_VS_ACCEPTANCE = "ess-sweep"
    E2_SIGMA_SWEEP = "sigma-sweep"
    E3_HISTOGRAMS = "hist"
    E4_COUNTEREXAMPLE = "counterexample"
    E5_HIGHDIM = "highdim"
    THEORY_TABLE = "theory-cov"
    DESIGN_TABLE = "design"


_MC_EXPERIMENTS = frozenset(
    {
        Experiment.E1_ESS_VS_ACCEPTANCE,
        Experiment.E2_SIGMA_SWEEP,
        Experiment.E3_HISTOGRAMS,
        Experiment.E4_COUNTEREXAMPLE,
        Experiment.E5_HIGHDIM,
    }
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully determines one experiment run (and hence its output bytes)."""

    experiment: Experiment
    targets: tuple[str, ...] = ()
    kernels: tuple[str, ...] = ()
    n_steps: int = 200_000
    replicates: int = 8
    seed: int = 0
    out_dir: str = "."
    allow_atomic: bool = False
    options: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if self.replicates < 1:
            raise ParameterError(f"replicates must be >= 1, got {self.replicates}")
        if self.n_steps < 1:
            raise ParameterError(f"n_steps must be >= 1, got {self.n_steps}")
        if self.experiment in _MC_EXPERIMENTS and self.n_steps < 1000:
            raise ParameterError(
                f"Monte Carlo experiments need n_steps >= 1000, got {self.n_steps}"
            )

    def option(self, key: str, default: str) -> str:
        for k, v in self.options:
            if k == key:
                return v
        return default

    def config_hash(self) -> str:
        payload = {
            "experiment": self.experiment.value,
            "targets": list(self.targets),
            "kernels": list(self.kernels),
            "n_steps": self.n_steps,
            "replicates": self.replicates,
            "seed": self.seed,
            "allow_atomic": self.allow_atomic,
            "options": sorted(self.options),
            "schema_version": _SCHEMA_VERSION,
        }
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "-", text).strip("-").lower()


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_csv(path: Path, schema: str, columns, rows, cfg_hash: str, comments=()) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# schema={schema} v{_SCHEMA_VERSION}\n")
        fh.write(f"# config_hash={cfg_hash}\n")
        fh.write(f"# generated={_timestamp()}\n")
        for comment in comments:
            fh.write(f"# {comment}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def _parse_pseudo_params(text: str, spec_text: str) -> dict[str, float]:
    params: dict[str, float] = {}
    if text:
        for item in text.split(","):
            key, eq, value = item.partition("=")
            if not eq or not key.strip():
                raise ParameterError(f"malformed kernel parameter {item!r} in {spec_text!r}")
            try:
                params[key.strip()] = float(value)
            except ValueError:
                raise ParameterError(
                    f"kernel parameter {key.strip()!r} in {spec_text!r} is not a number"
                ) from None
    return params


def _resolve_kernel(
    spec_text: str, target: TargetDensity, designs: dict[str, DesignResult]
) -> ProposalKernel:
    """Parse a kernel spec, resolving the designed-bimodal shorthand.

    ``rw-bimodal-design:ratio=R[,scale=S]`` becomes a bimodal increment at
    the target's designed jump S*x_star with sigma_q = R*(S*x_star).
    """
    name, _, params_text = spec_text.strip().partition(":")
    if name.strip().lower() == "rw-bimodal-design":
        params = _parse_pseudo_params(params_text, spec_text)
        if "ratio" not in params:
            raise ParameterError(f"{spec_text!r} needs ratio=<sigma_q/x_star>")
        scale = params.pop("scale", 1.0)
        ratio = params.pop("ratio")
        if params:
            raise ParameterError(
                f"unknown parameters {sorted(params)} in kernel spec {spec_text!r}"
            )
        if target.target_id not in designs:
            designs[target.target_id] = solve_design(target)
        x_star = scale * designs[target.target_id].x_star
        return RandomWalkKernel(bimodal_rw(x_star, ratio * x_star))
    return parse_kernel_spec(spec_text)


def _theory_formulas(kernel: ProposalKernel, target: TargetDensity, which: str):
    if which == "all":
        wanted = [Formula.GENERAL_2D, Formula.SYMRW_2D, Formula.EXPLICIT_1D]
    else:
        by_value = {f.value: f for f in Formula}
        wanted = []
        for token in which.split(","):
            token = token.strip()
            if token not in by_value:
                raise ParameterError(
                    f"unknown formula {token!r}; choose from {sorted(by_value)} or 'all'"
                )
            wanted.append(by_value[token])
    out = []
    for formula in wanted:
        if isinstance(kernel, FlipGaussianKernel):
            if formula is Formula.GENERAL_2D:
                out.append(formula)
            continue
        atomic = kernel.increment.kind is IncrementKind.TWO_POINT
        if formula is Formula.EXPLICIT_1D:
            if target.symmetric_unimodal:
                out.append(formula)
        elif not atomic:
            out.append(formula)
    return out


def _run_theory_table(cfg: ExperimentConfig) -> list[Path]:
    out_dir = Path(cfg.out_dir)
    which = cfg.option("formulas", "all")
    designs: dict[str, DesignResult] = {}
    rows = []
    for tspec in cfg.targets or _DEFAULT_THEORY_TARGETS:
        target = parse_target_spec(tspec)
        for kspec in cfg.kernels or _DEFAULT_THEORY_KERNELS:
            kernel = _resolve_kernel(kspec, target, designs)
            for formula in _theory_formulas(kernel, target, which):
                if formula is Formula.GENERAL_2D:
                    report = cov_general(target, kernel)
                elif formula is Formula.SYMRW_2D:
                    report = cov_symrw(target, kernel.increment)
                else:
                    report = cov_explicit1d(target, kernel.increment)
                rows.append(
                    (target.target_id, kernel.kernel_id, formula.value, report.value, report.est_error)
                )
    path = _write_csv(
        out_dir / "theory_cov.csv",
        "theory_cov",
        ("target", "kernel", "formula", "cov", "est_error"),
        rows,
        cfg.config_hash(),
    )
    return [path]


def _run_design_table(cfg: ExperimentConfig) -> list[Path]:
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for tspec in cfg.targets or _DEFAULT_DESIGN_TARGETS:
        target = parse_target_spec(tspec)
        result = solve_design(target)
        payload = {
            "schema": f"design v{_SCHEMA_VERSION}",
            "config_hash": cfg.config_hash(),
            "target": target.target_id,
            "y_star": result.y_star,
            "x_star": result.x_star,
            "w_max": result.w_max,
            "cov_infimum": result.cov_infimum,
            "sigma_pi2": result.sigma_pi2,
            "unique": result.unique,
            "foc_residual": result.foc_residual,
        }
        path = out_dir / f"design_{_slug(tspec)}.json"
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        paths.append(path)
    return paths


def _run_ess_sweep(cfg: ExperimentConfig) -> list[Path]:
    out_dir = Path(cfg.out_dir)
    cfg_hash = cfg.config_hash()
    paths = []
    timing_rows = []
    stream = 0
    for tspec in cfg.targets or _E1_TARGETS:
        target = parse_target_spec(tspec)
        x_star = solve_design(target).x_star
        points: list[tuple[ProposalKernel, float]] = []
        for sigma in _E1_GAUSS_SIGMAS:
            points.append((RandomWalkKernel(gaussian_rw(sigma)), sigma))
        for ratio in _E1_RATIOS:
            for scale in _E1_SCALES:
                xs = scale * x_star
                points.append((RandomWalkKernel(bimodal_rw(xs, ratio * xs)), ratio * xs))
        rows = []
        for kernel, sigma_q in points:
            started = time.perf_counter()
            accs, esss, rho1s = [], [], []
            for _ in range(cfg.replicates):
                chain = run_chain(
                    target, kernel, RunConfig(n_steps=cfg.n_steps, seed=cfg.seed), stream=stream
                )
                stream += 1
                report = ess(chain)
                accs.append(chain.mean_acceptance())
                esss.append(report.ess)
                rho1s.append(float(report.rho[1]))
            wall = time.perf_counter() - started
            mean_ess = float(np.mean(esss))
            rows.append(
                (
                    kernel.kernel_id,
                    sigma_q,
                    float(np.mean(accs)),
                    mean_ess,
                    mean_ess / (cfg.n_steps / 1000.0),
                    float(np.mean(rho1s)),
                )
            )
            timing_rows.append((target.target_id, kernel.kernel_id, sigma_q, wall))
        paths.append(
            _write_csv(
                out_dir / f"ess_sweep_{_slug(tspec)}.csv",
                "ess_sweep",
                ("kernel", "sigma_q", "acceptance", "ess", "ess_per_1k_steps", "lag1_corr"),
                rows,
                cfg_hash,
                comments=(f"target={target.target_id}", f"n_steps={cfg.n_steps}"),
            )
        )
    paths.append(
        _write_csv(
            out_dir / "ess_sweep_timing.csv",
            "ess_sweep_timing",
            ("target", "kernel", "sigma_q", "wall_clock_s"),
            timing_rows,
            cfg_hash,
            comments=("wall-clock seconds per grid point; not byte-reproducible by design",),
        )
    )
    return paths


def _run_sigma_sweep(cfg: ExperimentConfig) -> list[Path]:
    out_dir = Path(cfg.out_dir)
    tspec = cfg.targets[0] if cfg.targets else _E2_TARGET
    target = parse_target_spec(tspec)
    result = solve_design(target)
    sigma2 = target.variance()
    asymptote = result.cov_infimum / sigma2
    rows = []
    stream = 0
    for ratio in _E2_RATIOS:
        sigma_q = ratio * result.x_star
        increment = bimodal_rw(result.x_star, sigma_q)
        corr_theory = cov_explicit1d(target, increment).value / sigma2
        corrs = []
        for _ in range(cfg.replicates):
            chain = run_chain(
                target,
                RandomWalkKernel(increment),
                RunConfig(n_steps=cfg.n_steps, seed=cfg.seed),
                stream=stream,
            )
            stream += 1
            corrs.append(empirical_lag_cov(chain, 1) / empirical_lag_cov(chain, 0))
        corr_emp = float(np.mean(corrs))
        corr_se = float(np.std(corrs, ddof=1) / math.sqrt(cfg.replicates))
        rows.append((sigma_q, 1.0 / sigma_q, corr_theory, corr_emp, corr_se, asymptote))
    path = _write_csv(
        out_dir / "sigma_sweep.csv",
        "sigma_sweep",
        ("sigma_q", "inv_sigma_q", "corr_theory", "corr_emp", "corr_emp_se", "asymptote"),
        rows,
        cfg.config_hash(),
        comments=(f"target={target.target_id}", f"x_star={result.x_star!r}"),
    )
    return [path]


def _run_histograms(cfg: ExperimentConfig) -> list[Path]:
    out_dir = Path(cfg.out_dir)
    rows = []
    stream = 0
    for tspec in cfg.targets or _E3_TARGETS:
        target = parse_target_spec(tspec)
        x_star = solve_design(target).x_star
        kernel = RandomWalkKernel(bimodal_rw(x_star, _E3_RATIO * x_star))
        half_width = _E3_RANGE_SIGMAS * math.sqrt(target.variance())
        edges = np.linspace(target.mu - half_width, target.mu + half_width, _E3_NBINS + 1)
        counts = np.zeros(_E3_NBINS, dtype=np.int64)
        for _ in range(cfg.replicates):
            chain = run_chain(
                target, kernel, RunConfig(n_steps=cfg.n_steps, seed=cfg.seed), stream=stream
            )
            stream += 1
            counts += np.histogram(chain.states, bins=edges)[0]
        total = cfg.replicates * cfg.n_steps
        centers = 0.5 * (edges[:-1] + edges[1:])
        width = float(edges[1] - edges[0])
        expected = (target.cdf(edges[1:]) - target.cdf(edges[:-1])) * total
        pdf_vals = target.pdf(centers)
        for i in range(_E3_NBINS):
            rows.append(
                (
                    target.target_id,
                    float(centers[i]),
                    width,
                    int(counts[i]),
                    float(pdf_vals[i]),
                    float(expected[i]),
                )
            )
    path = _write_csv(
        out_dir / "hist.csv",
        "hist",
        ("target", "bin_center", "bin_width", "count", "pdf", "expected_count"),
        rows,
        cfg.config_hash(),
        comments=(f"pooled over {cfg.replicates} replicate chains of n_steps={cfg.n_steps}",),
    )
    return [path]


def _run_counterexample(cfg: ExperimentConfig) -> list[Path]:
    out_dir = Path(cfg.out_dir)
    target = parse_target_spec(cfg.targets[0]) if cfg.targets else gaussian()
    rows = []
    stream = 0
    for c in _E4_CS:
        kernel = FlipGaussianKernel(c=c, var=2.0)
        quad = cov_general(target, kernel).value
        emps = []
        for _ in range(cfg.replicates):
            chain = run_chain(
                target, kernel, RunConfig(n_steps=cfg.n_steps, seed=cfg.seed), stream=stream
            )
            stream += 1
            emps.append(empirical_lag_cov(chain, 1))
        rows.append(
            (
                c,
                quad,
                float(np.mean(emps)),
                float(np.std(emps, ddof=1) / math.sqrt(cfg.replicates)),
            )
        )
    path = _write_csv(
        out_dir / "counterexample.csv",
        "counterexample",
        ("c", "cov_quadrature", "cov_emp", "cov_emp_se"),
        rows,
        cfg.config_hash(),
        comments=(f"target={target.target_id}", "proposal flip:c=<c>,var=2"),
    )
    return [path]


def _run_highdim_sweep(cfg: ExperimentConfig) -> list[Path]:
    out_dir = Path(cfg.out_dir)
    d = int(cfg.option("dim", str(_E5_DIM)))
    ells = tuple(float(v) for v in cfg.option("ells", "").split(",") if v) or _E5_ELLS
    product = ProductTarget((gaussian(),) * d)
    rows = []
    for i, ell in enumerate(ells):
        _, report = run_highdim(
            product, ell, RunConfig(n_steps=cfg.n_steps, seed=cfg.seed), stream=i
        )
        for coord in range(d):
            rows.append(
                (
                    d,
                    ell,
                    report.mbar,
                    report.predicted_acceptance,
                    report.empirical_acceptance,
                    coord,
                    float(report.diag_cov_pred[coord]),
                    float(report.diag_cov_emp[coord]),
                    report.offdiag_max,
                )
            )
    path = _write_csv(
        out_dir / "highdim.csv",
        "highdim",
        ("d", "ell", "mbar", "pred_acc", "emp_acc", "coord", "diag_pred", "diag_emp", "offdiag_max"),
        rows,
        cfg.config_hash(),
    )
    return [path]


_RUNNERS = {
    Experiment.THEORY_TABLE: _run_theory_table,
    Experiment.DESIGN_TABLE: _run_design_table,
    Experiment.E1_ESS_VS_ACCEPTANCE: _run_ess_sweep,
    Experiment.E2_SIGMA_SWEEP: _run_sigma_sweep,
    Experiment.E3_HISTOGRAMS: _run_histograms,
    Experiment.E4_COUNTEREXAMPLE: _run_counterexample,
    Experiment.E5_HIGHDIM: _run_highdim_sweep,
}


def run_experiment(cfg: ExperimentConfig) -> list[Path]:
    """Run one experiment, returning the files it wrote."""
    return _RUNNERS[cfg.experiment](cfg)


def _run_sample(args) -> list[Path]:
    target = parse_target_spec(args.target)
    designs: dict[str, DesignResult] = {}
    kernel = _resolve_kernel(args.kernel, target, designs)
    cfg = RunConfig(n_steps=args.steps, burn_in=args.burn_in, seed=args.seed)
    chain = run_chain(target, kernel, cfg, allow_atomic=args.allow_atomic)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"chain_{_slug(args.target)}__{_slug(args.kernel)}"
    if args.format == "csv":
        path = out_dir / f"{stem}.csv"
        write_chain_csv(chain, path)
    else:
        path = out_dir / f"{stem}.mhc"
        write_chain_binary(chain, path)
    return [path]


def _add_common(parser: argparse.ArgumentParser, steps_default: int = 200_000):
    parser.add_argument("--seed", type=int, default=0, help="base RNG seed")
    parser.add_argument("--steps", type=int, default=steps_default, help="steps per chain")
    parser.add_argument("--replicates", type=int, default=8, help="replicate chains per point")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument(
        "--allow-atomic",
        action="store_true",
        help="permit sampling the atomic two-point proposal (reducible chain)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mhcov",
        description=(
            "Closed-form and empirical unit-lag autocovariance of random-walk "
            "Metropolis-Hastings chains, optimal proposal design, and "
            "dimension-scaling experiments."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("theory-cov", help="covariance table across formulas")
    p.add_argument("--target", action="append", default=[], help="target spec (repeatable)")
    p.add_argument("--kernel", action="append", default=[], help="kernel spec (repeatable)")
    p.add_argument(
        "--formulas",
        default="all",
        help="comma list of general-2d,symrw-2d,explicit-1d (default all)",
    )
    _add_common(p)

    p = sub.add_parser("design", help="optimal two-point design per target (JSON)")
    p.add_argument("--target", action="append", default=[], help="target spec (repeatable)")
    _add_common(p)

    p = sub.add_parser("sample", help="run one chain and write it to disk")
    p.add_argument("--target", required=True, help="target spec")
    p.add_argument("--kernel", required=True, help="kernel spec")
    p.add_argument("--burn-in", type=int, default=0, help="steps discarded before recording")
    p.add_argument("--format", choices=("bin", "csv"), default="bin", help="output format")
    _add_common(p)

    p = sub.add_parser("ess-sweep", help="ESS versus acceptance grid (E1)")
    p.add_argument("--target", action="append", default=[], help="target spec (repeatable)")
    _add_common(p)

    p = sub.add_parser("sigma-sweep", help="lag-1 correlation versus sigma_q (E2)")
    p.add_argument("--target", default=None, help="target spec (single)")
    _add_common(p)

    p = sub.add_parser("hist", help="sampled histograms against exact pdfs (E3)")
    p.add_argument("--target", action="append", default=[], help="target spec (repeatable)")
    _add_common(p)

    p = sub.add_parser("counterexample", help="negative covariance of the flip kernel (E4)")
    p.add_argument("--target", default=None, help="target spec (single)")
    _add_common(p)

    p = sub.add_parser("highdim", help="dimension-scaling sweep (E5)")
    p.add_argument("--dim", type=int, default=_E5_DIM, help="number of coordinates")
    p.add_argument("--ells", default="", help="comma list of step parameters")
    _add_common(p)

    return parser


def _config_from_args(experiment: Experiment, args) -> ExperimentConfig:
    targets: tuple[str, ...] = ()
    if getattr(args, "target", None):
        value = args.target
        targets = tuple(value) if isinstance(value, list) else (value,)
    kernels = tuple(getattr(args, "kernel", []) or [])
    options = []
    if hasattr(args, "formulas"):
        options.append(("formulas", args.formulas))
    if hasattr(args, "dim"):
        options.append(("dim", str(args.dim)))
    if hasattr(args, "ells"):
        options.append(("ells", args.ells))
    return ExperimentConfig(
        experiment=experiment,
        targets=targets,
        kernels=kernels,
        n_steps=args.steps,
        replicates=args.replicates,
        seed=args.seed,
        out_dir=args.out,
        allow_atomic=args.allow_atomic,
        options=tuple(options),
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "sample":
            paths = _run_sample(args)
        else:
            cfg = _config_from_args(Experiment(args.command), args)
            paths = run_experiment(cfg)
    except MhcovError as exc:
        record = {
            "error": type(exc).__name__,
            "exit_code": exc.exit_code,
            "message": str(exc),
        }
        print(json.dumps(record), file=sys.stderr)
        return exc.exit_code
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
