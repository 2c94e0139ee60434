"""Corpus data model, JSONL I/O, text cleaning, and word/paragraph segmentation.

Every downstream stage (featurization, regression, ensembling, evaluation)
consumes the types defined here. A word index is a 0-based position in the
whitespace token sequence of the text *as stored*, so boundary-labelled data
defaults to cleaning mode "none": gold indices must never shift.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Mapping, Optional, Union

__all__ = [
    "LabelScheme",
    "Document",
    "Corpus",
    "CLEANING_MODES",
    "load_jsonl",
    "clean_text",
    "tokenize_words",
    "paragraph_starts",
    "write_predictions",
]


class LabelScheme(str, Enum):
    """Label interpretation: binary class, six-way class, or boundary word index."""

    BINARY = "binary"
    MULTIWAY6 = "multiway6"
    BOUNDARY = "boundary"


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    label: Optional[int] = None
    source: Optional[str] = None
    generator: Optional[str] = None


def _check_label(doc: Document, scheme: LabelScheme, where: str) -> None:
    label = doc.label
    if label is None:
        return
    if isinstance(label, bool) or not isinstance(label, int):
        raise ValueError(f"{where}: label must be an integer, got {label!r}")
    if scheme is LabelScheme.BINARY and label not in (0, 1):
        raise ValueError(f"{where}: label out of range for binary scheme: {label}")
    if scheme is LabelScheme.MULTIWAY6 and not 0 <= label <= 5:
        raise ValueError(f"{where}: label out of range for multiway6 scheme: {label}")
    if scheme is LabelScheme.BOUNDARY:
        word_count = len(tokenize_words(doc.text))
        if not 0 <= label <= word_count:
            raise ValueError(
                f"{where}: label out of range for boundary scheme: "
                f"{label} not in [0, {word_count}]"
            )


@dataclass(frozen=True)
class Corpus:
    """Immutable ordered document collection under one label scheme."""

    documents: tuple[Document, ...]
    scheme: LabelScheme

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for doc in self.documents:
            if not doc.id:
                raise ValueError("document id must be non-empty")
            if doc.id in seen:
                raise ValueError(f"duplicate document id {doc.id!r}")
            seen.add(doc.id)
            _check_label(doc, self.scheme, f"document {doc.id!r}")

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self) -> Iterator[Document]:
        return iter(self.documents)

    def __getitem__(self, i: int) -> Document:
        return self.documents[i]

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(doc.id for doc in self.documents)

    def label_map(self) -> dict[str, int]:
        """Gold labels keyed by id; every document must carry one."""
        labels = {}
        for doc in self.documents:
            if doc.label is None:
                raise ValueError(f"document {doc.id!r} has no gold label")
            labels[doc.id] = doc.label
        return labels


def load_jsonl(path, scheme: LabelScheme) -> Corpus:
    """Read one document per JSON line: required "id"/"text", optional
    "label"/"source"/"model" ("model" is stored as the generator)."""
    docs: list[Document] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            where = f"{path}: line {line_no}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{where}: invalid JSON: {exc.msg}") from exc
            if not isinstance(obj, dict):
                raise ValueError(f"{where}: expected a JSON object")
            if "id" not in obj or "text" not in obj:
                raise ValueError(f"{where}: missing required field 'id' or 'text'")
            raw_id = obj["id"]
            if not isinstance(raw_id, (str, int)) or isinstance(raw_id, bool):
                raise ValueError(f"{where}: id must be a string or integer")
            doc_id = str(raw_id)
            if doc_id in seen:
                raise ValueError(f"{where}: duplicate document id {doc_id!r}")
            seen.add(doc_id)
            text = obj["text"]
            if not isinstance(text, str):
                raise ValueError(f"{where}: text must be a string")
            doc = Document(
                id=doc_id,
                text=text,
                label=obj.get("label"),
                source=obj.get("source"),
                generator=obj.get("model"),
            )
            _check_label(doc, scheme, where)
            docs.append(doc)
    return Corpus(documents=tuple(docs), scheme=scheme)


CLEANING_MODES = ("none", "links_only", "full")

# A URL plus any spaces/tabs immediately before it, up to the next whitespace.
_URL_RE = re.compile(r"[ \t]*(?:https?://|www\.)\S*")
_EXTRA_NEWLINES_RE = re.compile(r"\n{3,}")
_SPACE_RUN_RE = re.compile(r"[ \t]+")
_KEPT_PUNCTUATION = frozenset(".,!?;:'\"()-")


def _clean_once(text: str, mode: str) -> str:
    text = _URL_RE.sub("", text)
    if mode == "links_only":
        return text
    text = "".join(
        ch for ch in text if ch.isalnum() or ch.isspace() or ch in _KEPT_PUNCTUATION
    )
    text = _EXTRA_NEWLINES_RE.sub("\n\n ", text)
    return _SPACE_RUN_RE.sub(" ", text)


def clean_text(text: str, mode: str = "full") -> str:
    """Normalize text: "links_only" removes hyperlink spans, "full" additionally
    drops characters outside letters/digits/whitespace/basic punctuation,
    squeezes runs of three or more newlines down to a blank line, and collapses
    space runs. "none" is the identity. Idempotent in every mode.
    """
    if mode not in CLEANING_MODES:
        raise ValueError(f"unknown cleaning mode {mode!r}; expected one of {CLEANING_MODES}")
    if mode == "none":
        return text
    # Character stripping can splice a fresh URL together (e.g. "w#ww." ->
    # "www."), so repeat the pass until the text is stable. Each changing pass
    # strictly reduces (newline count, length) lexicographically, so this
    # terminates after a handful of rounds.
    while True:
        cleaned = _clean_once(text, mode)
        if cleaned == text:
            return cleaned
        text = cleaned


def tokenize_words(text: str) -> list[str]:
    """Split on runs of Unicode whitespace; token i is word index i (0-based)."""
    return text.split()


def paragraph_starts(text: str) -> list[int]:
    """Word index of the first token of each paragraph (newline-separated span
    with at least one token). A text with no tokens yields [0] so callers
    always have an anchor."""
    starts: list[int] = []
    idx = 0
    for block in text.split("\n"):
        tokens = block.split()
        if tokens:
            starts.append(idx)
            idx += len(tokens)
    return starts or [0]


def write_predictions(preds: Union[Mapping, "object"], path) -> None:
    """Write {"id", "label"} JSON lines, one per prediction, input order
    preserved. Accepts a plain id->label mapping or any object exposing a
    ``values`` dict (a PredictionSet)."""
    values = preds if isinstance(preds, Mapping) else preds.values
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id, label in values.items():
            if hasattr(label, "item"):  # numpy scalar -> plain Python number
                label = label.item()
            fh.write(json.dumps({"id": doc_id, "label": label}, ensure_ascii=False) + "\n")
