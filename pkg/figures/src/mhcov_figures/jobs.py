"""Figure job descriptions loaded from JSON files.

A job file fully determines one figure::

    {
      "figure": "fig2",
      "inputs": ["out/sigma_sweep.csv"],
      "output": "out/fig2",
      "style": {"dpi": 150, "width": 6.0, "height": 4.0}
    }

``output`` is an image path; its stem is used to emit both a PNG and an
SVG.  ``style`` is optional.  fig1 takes one ESS-sweep CSV per panel;
every other figure takes exactly one input.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .io import FigureInputError

FIGURE_IDS = ("fig1", "fig2", "fig3", "fig4_counterexample", "fig5_highdim")

_STYLE_KEYS = {"dpi", "width", "height"}
_STYLE_DEFAULTS = {"dpi": 150, "width": 6.4, "height": 4.8}


@dataclass(frozen=True)
class FigureJob:
    """One figure to render: inputs, identity, output stem, style."""

    figure: str
    inputs: tuple[str, ...]
    output: str
    style: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.figure not in FIGURE_IDS:
            raise FigureInputError(
                f"unknown figure id {self.figure!r}; expected one of {', '.join(FIGURE_IDS)}"
            )
        if not self.inputs:
            raise FigureInputError(f"{self.figure}: at least one input CSV is required")
        if self.figure != "fig1" and len(self.inputs) != 1:
            raise FigureInputError(
                f"{self.figure}: exactly one input CSV is required, got {len(self.inputs)}"
            )
        unknown = set(self.style) - _STYLE_KEYS
        if unknown:
            raise FigureInputError(
                f"unknown style options {sorted(unknown)}; supported: {sorted(_STYLE_KEYS)}"
            )

    def style_value(self, key: str):
        return self.style.get(key, _STYLE_DEFAULTS[key])

    @property
    def output_stem(self) -> Path:
        path = Path(self.output)
        return path.with_suffix("") if path.suffix else path

    @classmethod
    def from_json(cls, path: str | Path) -> "FigureJob":
        path = Path(path)
        if not path.exists():
            raise FigureInputError(f"job file not found: {path}")
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise FigureInputError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(payload, dict):
            raise FigureInputError(f"{path}: job must be a JSON object")
        missing = [key for key in ("figure", "inputs", "output") if key not in payload]
        if missing:
            raise FigureInputError(f"{path}: job is missing keys {missing}")
        inputs = payload["inputs"]
        if isinstance(inputs, str):
            inputs = [inputs]
        if not isinstance(inputs, list) or not all(isinstance(p, str) for p in inputs):
            raise FigureInputError(f"{path}: 'inputs' must be a path or list of paths")
        style = payload.get("style", {})
        if not isinstance(style, dict):
            raise FigureInputError(f"{path}: 'style' must be an object")
        # inputs are resolved relative to the job file's directory
        base = path.parent
        resolved = tuple(str((base / p)) if not Path(p).is_absolute() else p for p in inputs)
        out = payload["output"]
        out_resolved = str(base / out) if not Path(out).is_absolute() else out
        return cls(
            figure=str(payload["figure"]),
            inputs=resolved,
            output=out_resolved,
            style=style,
        )
