"""Experiment harness: configuration, sweeps, lemma runs and output."""

from .config import AlphaGrid, SweepConfig, config_from_dict, load_config, m_tx_for
from .experiments import (
    ExperimentRecord,
    OptimalAlpha,
    find_optimal_alpha,
    make_record,
    run_alpha_sweep,
    run_lemma_suite,
    run_user_sweep,
)
from .output import records_to_csv, write_records, write_reports_jsonl

__all__ = [
    "AlphaGrid",
    "SweepConfig",
    "config_from_dict",
    "load_config",
    "m_tx_for",
    "ExperimentRecord",
    "OptimalAlpha",
    "find_optimal_alpha",
    "make_record",
    "run_alpha_sweep",
    "run_lemma_suite",
    "run_user_sweep",
    "records_to_csv",
    "write_records",
    "write_reports_jsonl",
]
