"""Batch renderer for switchback CSV scans: distance and rate figures."""

from .render import (
    FigureSpec,
    SchemaMismatch,
    Table,
    dump_text,
    load_table,
    render,
)

__version__ = "0.1.0"
