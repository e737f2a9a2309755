"""Figure rendering for kinkhmc experiment CSVs."""

from .render import RenderResult, render
from .spec import KINDS, FigureSpec, SchemaError

__all__ = ["FigureSpec", "KINDS", "RenderResult", "SchemaError", "render"]
