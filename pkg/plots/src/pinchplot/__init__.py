"""Figure rendering for pinchbeam experiment CSVs."""

from .figures import (
    FIGURE_KINDS,
    RESULT_HEADER,
    TRACE_HEADER,
    FigureSpec,
    NoDataError,
    SchemaError,
    render,
)

__all__ = [
    "FIGURE_KINDS",
    "RESULT_HEADER",
    "TRACE_HEADER",
    "FigureSpec",
    "NoDataError",
    "SchemaError",
    "render",
]

__version__ = "0.1.0"
