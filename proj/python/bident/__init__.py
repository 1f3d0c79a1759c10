"""Paraphrase mining and paraphrase-corpus cleaning by bidirectional entailment."""

from bident._core import (
    Record,
    DatasetSplit,
    Scorer,
    load_dataset,
    split_half,
    carve_validation,
    oracle_table,
    oracle_table_file,
    oracle_subsequence,
    local_model,
    remote,
    score,
    decide,
    extract,
    clean,
    confusion,
    levenshtein,
    normalized_edit_distance,
    token_length_ratio,
    similarity_stats,
    overlap,
    sample_for_validation,
    hand_precision,
    render_report,
    encode,
    run_cli,
    Error,
    ConfigError,
    DataError,
    IoError,
    ScoringError,
    __version__,
)

__all__ = [
    "Record",
    "DatasetSplit",
    "Scorer",
    "load_dataset",
    "split_half",
    "carve_validation",
    "oracle_table",
    "oracle_table_file",
    "oracle_subsequence",
    "local_model",
    "remote",
    "score",
    "decide",
    "extract",
    "clean",
    "confusion",
    "levenshtein",
    "normalized_edit_distance",
    "token_length_ratio",
    "similarity_stats",
    "overlap",
    "sample_for_validation",
    "hand_precision",
    "render_report",
    "encode",
    "run_cli",
    "Error",
    "ConfigError",
    "DataError",
    "IoError",
    "ScoringError",
]
