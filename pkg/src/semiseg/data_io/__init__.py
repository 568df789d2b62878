"""File formats and synthetic data generators."""
from .formats import (
    ClassDictionary,
    FormatError,
    read_labels,
    read_scores,
    read_segments,
    read_transitions,
    read_weights,
    write_labels,
    write_scores,
    write_segments,
    write_transitions,
    write_weights,
)
from .synthetic import (
    ToyConfig,
    ToyReport,
    generate_benchmark,
    generate_toy,
    run_toy_experiment,
)

__all__ = [
    "ClassDictionary",
    "FormatError",
    "read_labels",
    "read_scores",
    "read_segments",
    "read_transitions",
    "read_weights",
    "write_labels",
    "write_scores",
    "write_segments",
    "write_transitions",
    "write_weights",
    "ToyConfig",
    "ToyReport",
    "generate_benchmark",
    "generate_toy",
    "run_toy_experiment",
]
