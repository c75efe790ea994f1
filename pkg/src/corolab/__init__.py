"""Typed stackful coroutines with snapshots: calculus workbench and compiler."""

__version__ = "0.1.0"
