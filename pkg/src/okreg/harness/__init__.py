"""Dataset ingestion, experiment orchestration, reporting and the CLI."""

from .data import Dataset, DatasetSpec, load_and_preprocess, preprocess
from .diagnose import diagnose_spectrum, suggest_parameters
from .emit import emit
from .experiment import ExperimentConfig, RunReport, run_experiment

__all__ = [
    "Dataset",
    "DatasetSpec",
    "ExperimentConfig",
    "RunReport",
    "diagnose_spectrum",
    "emit",
    "load_and_preprocess",
    "preprocess",
    "run_experiment",
    "suggest_parameters",
]
