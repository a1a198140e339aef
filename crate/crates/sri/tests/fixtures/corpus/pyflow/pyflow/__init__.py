"""Tiny dataflow helpers."""

from .graph import Graph
from .stats import mean, median

__all__ = ["Graph", "mean", "median"]
