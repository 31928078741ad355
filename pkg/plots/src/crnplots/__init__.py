"""Figures and tables from crnsim sweep CSVs."""

from .render import SchemaError, format_steps_table, load_aggregates, render

__all__ = ["SchemaError", "format_steps_table", "load_aggregates", "render"]
