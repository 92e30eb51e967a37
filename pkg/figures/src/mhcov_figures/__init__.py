"""Figure rendering for mhcov experiment outputs.

Reads the CSV tables the ``mhcov`` command line writes and renders
static PNG + SVG figures.  All numbers are taken verbatim from the
input files; this package performs plotting transforms only.
"""

from .io import FigureInputError, Table, read_table
from .jobs import FIGURE_IDS, FigureJob
from .render import build_spec, render

__all__ = [
    "FIGURE_IDS",
    "FigureInputError",
    "FigureJob",
    "Table",
    "build_spec",
    "read_table",
    "render",
]

__version__ = "0.1.0"
