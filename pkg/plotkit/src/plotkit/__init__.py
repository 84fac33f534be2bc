"""Publication-style figure rendering for pt-hybrid output directories."""

__version__ = "0.1.0"

from .render import FigureJob, SchemaError, render

__all__ = ["__version__", "FigureJob", "SchemaError", "render"]
