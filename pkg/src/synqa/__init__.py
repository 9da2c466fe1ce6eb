"""Fidelity and novelty metrics for synthetic tabular data."""

from .accuracy import AccuracyResult, compute_accuracy
from .datamodel import ColumnType, ContextJoin, Dataset, from_records, join_context, load_dataset
from .embedding import EncoderSpec
from .evaluate import report
from .report import MetricsDocument, ReportBundle

__all__ = [
    "AccuracyResult",
    "ColumnType",
    "ContextJoin",
    "Dataset",
    "EncoderSpec",
    "MetricsDocument",
    "ReportBundle",
    "compute_accuracy",
    "from_records",
    "join_context",
    "load_dataset",
    "report",
]

__version__ = "0.1.0"
