"""Figures from fraclab run artifacts.

Consumes only the documented CSV/JSON contracts (grid CSVs as x,y,value
rows, traces as t,sup_norm rows, report.json scalars) and never recomputes
any quantity: the solver package stays the single source of numerical truth.
"""

from .render import FigureRequest, MissingArtifact, ParseError, build_figure, render

__all__ = ["FigureRequest", "MissingArtifact", "ParseError", "build_figure", "render"]

__version__ = "0.1.0"
