"""Export transformer encoder outputs to the JSONL interchange formats.

Two operations, both batch-inference only (no training): `export_embeddings`
writes pooled last-layer states as {"id", "vector"} rows behind a
{"_meta": {model, pooling, dim}} header, and `export_predictions` writes
{"id", "probs"} rows from a fine-tuned sequence classifier. Output order is
corpus order and reruns write identical bytes.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np
import torch

POOLINGS = ("mean", "cls")
OUTPUT_KINDS = ("embeddings", "probs")


@dataclass(frozen=True)
class ExportSpec:
    model: str
    pooling: str = "mean"
    max_length: int = 512
    batch_size: int = 8
    output: str = "embeddings"

    def __post_init__(self) -> None:
        if self.pooling not in POOLINGS:
            raise ValueError(f"unknown pooling {self.pooling!r}; expected one of {POOLINGS}")
        if self.output not in OUTPUT_KINDS:
            raise ValueError(
                f"unknown output kind {self.output!r}; expected one of {OUTPUT_KINDS}"
            )
        if self.max_length < 1:
            raise ValueError("max_length must be at least 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")


def read_corpus(path) -> list[tuple[str, str]]:
    """Read {"id", "text"} JSON lines; ids are coerced to strings and must be
    unique. Blank lines are skipped."""
    rows: list[tuple[str, str]] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"{path}: line {line_no}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{where}: invalid JSON: {exc.msg}") from exc
            if not isinstance(obj, dict) or "id" not in obj or "text" not in obj:
                raise ValueError(f"{where}: expected an object with 'id' and 'text'")
            if not isinstance(obj["text"], str):
                raise ValueError(f"{where}: 'text' must be a string")
            doc_id = str(obj["id"])
            if doc_id in seen:
                raise ValueError(f"{where}: duplicate document id {doc_id!r}")
            seen.add(doc_id)
            rows.append((doc_id, obj["text"]))
    return rows


def _check_model_limit(config, max_length: int) -> None:
    limit = getattr(config, "max_position_embeddings", None)
    if limit is not None and max_length > int(limit):
        raise ValueError(
            f"max_length {max_length} exceeds the model limit {int(limit)}"
        )


def _batches(rows, batch_size):
    for start in range(0, len(rows), batch_size):
        yield rows[start : start + batch_size]


def _count_truncated(tokenizer, texts, max_length: int) -> int:
    encoded = tokenizer(texts, truncation=False)["input_ids"]
    return sum(1 for ids in encoded if len(ids) > max_length)


def _pool(last_hidden: torch.Tensor, attention_mask: torch.Tensor, pooling: str) -> torch.Tensor:
    if pooling == "cls":
        return last_hidden[:, 0, :]
    mask = attention_mask.unsqueeze(-1).to(last_hidden.dtype)
    summed = (last_hidden * mask).sum(dim=1)
    # Clamp keeps an all-masked row finite; tokenizers emit at least the
    # special tokens, so this never changes a real count.
    return summed / mask.sum(dim=1).clamp(min=1.0)


def export_embeddings(corpus_path, spec: ExportSpec, out_path) -> None:
    """Pool last-layer token states per document and write one vector row per
    corpus row, header first. Over-length texts are truncated with a warning."""
    from transformers import AutoModel, AutoTokenizer

    rows = read_corpus(corpus_path)
    tokenizer = AutoTokenizer.from_pretrained(spec.model)
    model = AutoModel.from_pretrained(spec.model)
    model.eval()
    _check_model_limit(model.config, spec.max_length)

    truncated = 0
    vectors: list[list[float]] = []
    with torch.no_grad():
        for batch in _batches(rows, spec.batch_size):
            texts = [text for _, text in batch]
            truncated += _count_truncated(tokenizer, texts, spec.max_length)
            encoded = tokenizer(
                texts,
                padding=True,
                truncation=True,
                max_length=spec.max_length,
                return_tensors="pt",
            )
            output = model(**encoded)
            pooled = _pool(output.last_hidden_state, encoded["attention_mask"], spec.pooling)
            vectors.extend([float(v) for v in row] for row in pooled)
    if truncated:
        warnings.warn(
            f"{truncated} documents exceeded max_length={spec.max_length} "
            "and were truncated"
        )

    dim = len(vectors[0]) if vectors else int(model.config.hidden_size)
    with open(out_path, "w", encoding="utf-8") as fh:
        header = {"_meta": {"model": spec.model, "pooling": spec.pooling, "dim": dim}}
        fh.write(json.dumps(header) + "\n")
        for (doc_id, _), vector in zip(rows, vectors):
            fh.write(json.dumps({"id": doc_id, "vector": vector}) + "\n")


def export_predictions(
    corpus_path,
    model_path,
    out_path,
    n_classes: int | None = None,
    max_length: int = 512,
    batch_size: int = 8,
) -> None:
    """Run a fine-tuned sequence classifier and write per-class probability
    rows. Pass n_classes to enforce the class count the task expects."""
    from transformers import AutoModelForSequenceClassification, AutoTokenizer

    rows = read_corpus(corpus_path)
    tokenizer = AutoTokenizer.from_pretrained(model_path)
    model = AutoModelForSequenceClassification.from_pretrained(model_path)
    model.eval()
    _check_model_limit(model.config, max_length)
    num_labels = int(model.config.num_labels)
    if n_classes is not None and num_labels != n_classes:
        raise ValueError(
            f"class-count mismatch: model at {model_path} has {num_labels} "
            f"classes, task expects {n_classes}"
        )

    prob_rows: list[list[float]] = []
    with torch.no_grad():
        for batch in _batches(rows, batch_size):
            encoded = tokenizer(
                [text for _, text in batch],
                padding=True,
                truncation=True,
                max_length=max_length,
                return_tensors="pt",
            )
            probs = torch.softmax(model(**encoded).logits, dim=-1).numpy()
            # Renormalize in float64 so each written row sums to 1 exactly
            # up to parse precision, not just to float32 softmax precision.
            probs = probs.astype(np.float64)
            probs /= probs.sum(axis=1, keepdims=True)
            prob_rows.extend([float(v) for v in row] for row in probs)

    with open(out_path, "w", encoding="utf-8") as fh:
        for (doc_id, _), probs in zip(rows, prob_rows):
            fh.write(json.dumps({"id": doc_id, "probs": probs}) + "\n")
