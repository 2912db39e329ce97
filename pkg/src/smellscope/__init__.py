"""Threshold-based code smell detection for Python projects."""

from .corpus import ScanConfig, scan_corpus, scan_project
from .detect import Smell, SmellFinding, ThresholdProfile, detect_file, load_profile
from .report import CorpusSummary, ProjectReport, aggregate_project, rank_smells, serialize, summarize_corpus
from .syntax import count_loc, extract_entities, parse_file, parse_source

__version__ = "0.1.0"

__all__ = [
    "CorpusSummary",
    "ProjectReport",
    "ScanConfig",
    "Smell",
    "SmellFinding",
    "ThresholdProfile",
    "aggregate_project",
    "count_loc",
    "detect_file",
    "extract_entities",
    "load_profile",
    "parse_file",
    "parse_source",
    "rank_smells",
    "scan_corpus",
    "scan_project",
    "serialize",
    "summarize_corpus",
]
