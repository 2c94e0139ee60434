"""Bridge from pretrained transformer encoders to JSONL interchange files."""

from .export import (
    OUTPUT_KINDS,
    POOLINGS,
    ExportSpec,
    export_embeddings,
    export_predictions,
    read_corpus,
)

__all__ = [
    "OUTPUT_KINDS",
    "POOLINGS",
    "ExportSpec",
    "export_embeddings",
    "export_predictions",
    "read_corpus",
]

__version__ = "0.1.0"
