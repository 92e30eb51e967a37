"""Plot-spec construction and matplotlib rendering.

Rendering is split in two: :func:`build_spec` turns a job plus its CSV
inputs into a JSON-serializable plot specification (pure data: series
arrays, labels, reference lines), and :func:`render` draws that spec
with matplotlib and writes one PNG and one SVG.  Purity lives in the
spec: re-building from the same inputs yields an identical object, which
the test suite asserts instead of comparing pixels.

No statistic is computed here.  The single plotting transform is the
fig3 bar height count * pdf / expected_count, an exact rescaling of
shipped columns that puts sampled counts in density units.
"""

from __future__ import annotations

from pathlib import Path

from .io import FigureInputError, Table, read_table, require
from .jobs import FigureJob

_ESS_COLUMNS = ("kernel", "sigma_q", "acceptance", "ess", "ess_per_1k_steps", "lag1_corr")
_SIGMA_COLUMNS = ("sigma_q", "inv_sigma_q", "corr_theory", "corr_emp", "corr_emp_se", "asymptote")
_HIST_COLUMNS = ("target", "bin_center", "bin_width", "count", "pdf", "expected_count")
_COUNTER_COLUMNS = ("c", "cov_quadrature", "cov_emp", "cov_emp_se")
_HIGHDIM_COLUMNS = ("d", "ell", "mbar", "pred_acc", "emp_acc", "coord", "diag_pred", "diag_emp", "offdiag_max")


def _sorted_xy(pairs):
    pairs = sorted(pairs)
    return [x for x, _ in pairs], [y for _, y in pairs]


def _bimodal_ratio(kernel_id: str) -> float:
    try:
        params = dict(item.split("=", 1) for item in kernel_id.split(":", 1)[1].split(","))
        return float(params["sigma"]) / float(params["xstar"])
    except (IndexError, KeyError, ValueError, ZeroDivisionError):
        raise FigureInputError(
            f"cannot read sigma_q/x* from kernel id {kernel_id!r}"
        ) from None


def _spec_fig1(tables: list[Table]) -> dict:
    panels = []
    for table in tables:
        require(table, "ess_sweep", _ESS_COLUMNS)
        gauss, bimodal = [], {}
        for row in table.rows:
            kernel = row["kernel"]
            point = (float(row["acceptance"]), float(row["ess"]))
            if kernel.startswith("rw-gauss:"):
                gauss.append(point)
            elif kernel.startswith("rw-bimodal:"):
                ratio = round(_bimodal_ratio(kernel), 2)
                bimodal.setdefault(ratio, []).append(point)
            else:
                raise FigureInputError(
                    f"{table.path}: unexpected kernel family in column 'kernel': {kernel!r}"
                )
        if not gauss:
            raise FigureInputError(f"{table.path}: no Gaussian baseline rows in column 'kernel'")
        series = []
        x, y = _sorted_xy(gauss)
        series.append({"kind": "line", "x": x, "y": y, "label": "Gaussian random walk",
                       "marker": "o"})
        for ratio in sorted(bimodal):
            x, y = _sorted_xy(bimodal[ratio])
            series.append({"kind": "line", "x": x, "y": y,
                           "label": f"bimodal sigma_q/x* = {ratio:.2f}", "marker": "s"})
        panels.append({
            "title": table.meta.get("target", Path(table.path).stem),
            "xlabel": "acceptance rate",
            "ylabel": "ESS",
            "series": series,
        })
    return {"figure": "fig1", "panels": panels}


def _spec_fig2(table: Table) -> dict:
    require(table, "sigma_sweep", _SIGMA_COLUMNS)
    asymptotes = set(table.column("asymptote"))
    if len(asymptotes) != 1:
        raise FigureInputError(
            f"{table.path}: column 'asymptote' must be constant, found {sorted(asymptotes)}"
        )
    inv = table.floats("inv_sigma_q")
    theory = table.floats("corr_theory")
    emp = table.floats("corr_emp")
    se = table.floats("corr_emp_se")
    order = sorted(range(len(inv)), key=inv.__getitem__)
    series = [
        {"kind": "line", "x": [inv[i] for i in order], "y": [theory[i] for i in order],
         "label": "quadrature", "marker": "o"},
        {"kind": "errorbar", "x": [inv[i] for i in order], "y": [emp[i] for i in order],
         "yerr": [se[i] for i in order], "label": "empirical (1 SE)"},
        {"kind": "hline", "y": float(next(iter(asymptotes))),
         "label": "two-point infimum"},
    ]
    return {
        "figure": "fig2",
        "panels": [{
            "title": table.meta.get("target", "lag-1 correlation vs 1/sigma_q"),
            "xlabel": "1 / sigma_q",
            "ylabel": "lag-1 correlation",
            "series": series,
        }],
    }


def _spec_fig3(table: Table) -> dict:
    require(table, "hist", _HIST_COLUMNS)
    by_target: dict[str, list[dict[str, str]]] = {}
    for row in table.rows:
        by_target.setdefault(row["target"], []).append(row)
    panels = []
    for target, rows in by_target.items():
        rows = sorted(rows, key=lambda r: float(r["bin_center"]))
        centers = [float(r["bin_center"]) for r in rows]
        widths = [float(r["bin_width"]) for r in rows]
        pdf = [float(r["pdf"]) for r in rows]
        heights = []
        for r in rows:
            expected = float(r["expected_count"])
            density = float(r["count"]) * float(r["pdf"]) / expected if expected > 0.0 else 0.0
            heights.append(density)
        panels.append({
            "title": target,
            "xlabel": "x",
            "ylabel": "density",
            "series": [
                {"kind": "bars", "x": centers, "height": heights, "width": widths,
                 "label": "sampled"},
                {"kind": "line", "x": centers, "y": pdf, "label": "exact pdf", "marker": ""},
            ],
        })
    return {"figure": "fig3", "panels": panels}


def _spec_fig4(table: Table) -> dict:
    require(table, "counterexample", _COUNTER_COLUMNS)
    cs = table.floats("c")
    order = sorted(range(len(cs)), key=cs.__getitem__)
    quad = table.floats("cov_quadrature")
    emp = table.floats("cov_emp")
    se = table.floats("cov_emp_se")
    series = [
        {"kind": "line", "x": [cs[i] for i in order], "y": [quad[i] for i in order],
         "label": "quadrature", "marker": "o"},
        {"kind": "errorbar", "x": [cs[i] for i in order], "y": [emp[i] for i in order],
         "yerr": [se[i] for i in order], "label": "empirical (1 SE)"},
        {"kind": "hline", "y": 0.0, "label": "zero"},
    ]
    return {
        "figure": "fig4_counterexample",
        "panels": [{
            "title": "state-flipping kernel: negative lag-1 covariance",
            "xlabel": "c",
            "ylabel": "lag-1 covariance",
            "series": series,
        }],
    }


def _spec_fig5(table: Table) -> dict:
    require(table, "highdim", _HIGHDIM_COLUMNS)
    per_ell: dict[float, tuple[float, float]] = {}
    scatter_pred, scatter_emp = [], []
    for row in table.rows:
        ell = float(row["ell"])
        per_ell.setdefault(ell, (float(row["pred_acc"]), float(row["emp_acc"])))
        scatter_pred.append(float(row["diag_pred"]))
        scatter_emp.append(float(row["diag_emp"]))
    ells = sorted(per_ell)
    lo = min(scatter_pred + scatter_emp)
    hi = max(scatter_pred + scatter_emp)
    return {
        "figure": "fig5_highdim",
        "panels": [
            {
                "title": "acceptance rate vs step parameter",
                "xlabel": "ell",
                "ylabel": "acceptance rate",
                "series": [
                    {"kind": "line", "x": ells, "y": [per_ell[e][0] for e in ells],
                     "label": "predicted", "marker": ""},
                    {"kind": "line", "x": ells, "y": [per_ell[e][1] for e in ells],
                     "label": "empirical", "marker": "o"},
                ],
            },
            {
                "title": "per-coordinate lag-1 covariance",
                "xlabel": "predicted",
                "ylabel": "empirical",
                "series": [
                    {"kind": "scatter", "x": scatter_pred, "y": scatter_emp,
                     "label": "coordinates"},
                    {"kind": "line", "x": [lo, hi], "y": [lo, hi], "label": "y = x",
                     "marker": ""},
                ],
            },
        ],
    }


def build_spec(job: FigureJob) -> dict:
    """Read the job's inputs and build its deterministic plot spec."""
    tables = [read_table(p) for p in job.inputs]
    if job.figure == "fig1":
        return _spec_fig1(tables)
    if job.figure == "fig2":
        return _spec_fig2(tables[0])
    if job.figure == "fig3":
        return _spec_fig3(tables[0])
    if job.figure == "fig4_counterexample":
        return _spec_fig4(tables[0])
    return _spec_fig5(tables[0])


def _draw_series(ax, series: dict):
    kind = series["kind"]
    if kind == "line":
        marker = series.get("marker", "")
        ax.plot(series["x"], series["y"], marker=marker or None, label=series["label"])
    elif kind == "errorbar":
        ax.errorbar(series["x"], series["y"], yerr=series["yerr"], fmt="x", capsize=3,
                    label=series["label"])
    elif kind == "scatter":
        ax.scatter(series["x"], series["y"], s=12, alpha=0.7, label=series["label"])
    elif kind == "bars":
        ax.bar(series["x"], series["height"], width=series["width"], alpha=0.45,
               edgecolor="none", label=series["label"])
    elif kind == "hline":
        ax.axhline(series["y"], linestyle="--", color="0.35", label=series["label"])
    else:  # pragma: no cover - spec builders emit only the kinds above
        raise FigureInputError(f"unknown series kind {kind!r}")


def render(job: FigureJob) -> tuple[dict, list[Path]]:
    """Render one job; returns (plot spec, written paths).

    The spec is fully built (all inputs read and validated) before any
    output file is created, so invalid inputs never leave files behind.
    """
    spec = build_spec(job)

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    panels = spec["panels"]
    width = float(job.style_value("width"))
    height = float(job.style_value("height"))
    fig, axes = plt.subplots(
        1, len(panels), figsize=(width * len(panels), height), squeeze=False
    )
    for ax, panel in zip(axes[0], panels):
        for series in panel["series"]:
            _draw_series(ax, series)
        ax.set_title(panel["title"], fontsize=10)
        ax.set_xlabel(panel["xlabel"])
        ax.set_ylabel(panel["ylabel"])
        ax.legend(fontsize=8)
    fig.tight_layout()

    stem = job.output_stem
    stem.parent.mkdir(parents=True, exist_ok=True)
    paths = [stem.with_suffix(".png"), stem.with_suffix(".svg")]
    fig.savefig(paths[0], dpi=int(job.style_value("dpi")))
    fig.savefig(paths[1])
    plt.close(fig)
    return spec, paths
