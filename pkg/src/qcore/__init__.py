"""Exact q-series arithmetic, dissection and identity checks for 4-core pairs."""

from .series import LaurentSeries, NotInvertibleError, PrecisionError, SeriesError
from .expr import Evaluator, expand, parse, to_string
from .dissect import ProgressionSelector, extract, reassemble
from .cores import count_cores, count_pairs, is_t_core

__all__ = [
    "LaurentSeries", "SeriesError", "PrecisionError", "NotInvertibleError",
    "Evaluator", "expand", "parse", "to_string",
    "ProgressionSelector", "extract", "reassemble",
    "count_cores", "count_pairs", "is_t_core",
]

__version__ = "0.1.0"
