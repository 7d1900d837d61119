"""Simulation grid, aggregation, bootstrap study and the command-line tool."""

from .aggregate import (
    PLOT_HEADERS,
    BiasSummary,
    aggregate_selection_probabilities,
    bias_summary,
    emit_plot_data,
)
from .bootstrap import RealDataJob, StudyReport, encode_frame, run_bootstrap_study
from .grid import ExperimentGrid, ExperimentRecord, read_records, run_cell, run_grid

__all__ = [
    "PLOT_HEADERS",
    "BiasSummary",
    "ExperimentGrid",
    "ExperimentRecord",
    "RealDataJob",
    "StudyReport",
    "aggregate_selection_probabilities",
    "bias_summary",
    "emit_plot_data",
    "encode_frame",
    "read_records",
    "run_bootstrap_study",
    "run_cell",
    "run_grid",
]
