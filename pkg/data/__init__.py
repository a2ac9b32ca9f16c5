"""
Data package
Observation model, CSV ingestion, preprocessing and person-time expansion
"""

from data.models import Observation, SurvivalDataset, LongRow
from data.loader import CsvSchema, load_csv, preprocess, to_long, to_long_frame, export_long, subsample

__all__ = [
    "Observation", "SurvivalDataset", "LongRow", "CsvSchema",
    "load_csv", "preprocess", "to_long", "to_long_frame", "export_long", "subsample",
]
