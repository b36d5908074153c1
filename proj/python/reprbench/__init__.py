"""Benchmark frozen image embeddings with kNN and linear probes."""

import json as _json

from ._core import (
    ConfigError,
    EmbeddingSet,
    FormatError,
    IoError,
    NumericalError,
    ReprbenchError,
    TruncationError,
    ValidationError,
    __version__,
    aggregate,
    format_cell,
    knn_predict,
    labels_to_match,
    load_embeddings,
    load_labels,
    macro_f1,
    one_way_anova,
    probe_fit_predict,
    save_embeddings,
    studentized_range_cdf,
    tukey_hsd,
    utility_score,
    write_gaussian_task,
)
from ._core import run_benchmark as _run_benchmark


def run_benchmark(config_path, out_dir=None, jobs=1, seed_base=0):
    """Run the configured benchmark and return the report as a dict."""
    return _json.loads(_run_benchmark(str(config_path), None if out_dir is None else str(out_dir), jobs, seed_base))


__all__ = [
    "ConfigError",
    "EmbeddingSet",
    "FormatError",
    "IoError",
    "NumericalError",
    "ReprbenchError",
    "TruncationError",
    "ValidationError",
    "aggregate",
    "format_cell",
    "knn_predict",
    "labels_to_match",
    "load_embeddings",
    "load_labels",
    "macro_f1",
    "one_way_anova",
    "probe_fit_predict",
    "run_benchmark",
    "save_embeddings",
    "studentized_range_cdf",
    "tukey_hsd",
    "utility_score",
    "write_gaussian_task",
]
