"""Document featurization: TF-IDF, document-level PPMI, and imported embeddings.

All three featurizers fill rows of one FeatureMatrix contract so the
regression stage never cares where its vectors came from. TF-IDF and PPMI
are fit on a training corpus and frozen; encoder embeddings are computed
elsewhere and ingested from a JSONL interchange file of
{"id": ..., "vector": [...]} rows.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Optional, Union

import numpy as np

from .corpus import Corpus, Document, tokenize_words

__all__ = [
    "Vocabulary",
    "TfidfConfig",
    "TfidfModel",
    "PpmiModel",
    "EmbeddingSet",
    "FeatureMatrix",
    "Featurizer",
    "fit_tfidf",
    "transform_tfidf",
    "fit_ppmi",
    "transform_ppmi",
    "load_embeddings",
    "featurize",
    "featurizer_to_dict",
    "featurizer_from_dict",
]


@dataclass(frozen=True)
class Vocabulary:
    """Ordered term set with document frequencies; column j is terms[j]."""

    terms: tuple[str, ...]
    index: Mapping[str, int]
    doc_freq: Mapping[str, int]

    @staticmethod
    def from_doc_freqs(
        doc_freqs: Mapping[str, int],
        min_df: int = 1,
        max_features: Optional[int] = None,
    ) -> "Vocabulary":
        kept = [t for t, df in doc_freqs.items() if df >= min_df]
        # Descending document frequency, lexicographic tie-break: a stable
        # column order that survives any permutation of the fit corpus.
        kept.sort(key=lambda t: (-doc_freqs[t], t))
        if max_features is not None:
            kept = kept[:max_features]
        terms = tuple(kept)
        return Vocabulary(
            terms=terms,
            index={t: i for i, t in enumerate(terms)},
            doc_freq={t: doc_freqs[t] for t in terms},
        )

    def __len__(self) -> int:
        return len(self.terms)


@dataclass(frozen=True)
class TfidfConfig:
    min_df: int = 2
    max_features: Optional[int] = 50_000
    l2_normalize: bool = False


@dataclass(frozen=True)
class TfidfModel:
    vocab: Vocabulary
    n_docs_fit: int
    config: TfidfConfig


@dataclass(frozen=True)
class PpmiModel:
    vocab: Vocabulary
    term_prob: Mapping[str, float]
    total_count: int


@dataclass(frozen=True)
class EmbeddingSet:
    dim: int
    vectors: Mapping[str, np.ndarray]


Featurizer = Union[TfidfModel, PpmiModel, EmbeddingSet]


@dataclass(frozen=True)
class FeatureMatrix:
    """Documents-by-features matrix; row i belongs to row_ids[i]."""

    row_ids: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.values.ndim != 2:
            raise ValueError("feature matrix must be 2-dimensional")
        if len(self.row_ids) != self.values.shape[0]:
            raise ValueError("row_ids length does not match matrix rows")
        if self.values.size and not np.isfinite(self.values).all():
            raise ValueError("feature matrix contains non-finite values")

    @property
    def cols(self) -> int:
        return int(self.values.shape[1])


def fit_tfidf(corpus: Corpus, config: Optional[TfidfConfig] = None) -> TfidfModel:
    """Freeze vocabulary (doc_freq >= min_df, truncated to max_features) and
    the fit-corpus size N used by the smoothed idf."""
    if config is None:
        config = TfidfConfig()
    if len(corpus) == 0:
        raise ValueError("cannot fit TF-IDF on an empty corpus")
    doc_freqs: Counter = Counter()
    for doc in corpus:
        doc_freqs.update(set(tokenize_words(doc.text)))
    vocab = Vocabulary.from_doc_freqs(doc_freqs, config.min_df, config.max_features)
    if not vocab.terms:
        raise ValueError("empty vocabulary after min_df/max_features filtering")
    return TfidfModel(vocab=vocab, n_docs_fit=len(corpus), config=config)


def _idf(model: TfidfModel) -> np.ndarray:
    df = np.array([model.vocab.doc_freq[t] for t in model.vocab.terms], dtype=float)
    return np.log((1.0 + model.n_docs_fit) / (1.0 + df)) + 1.0


def _doc_tokens(doc: Union[Document, str]) -> list[str]:
    return tokenize_words(doc.text if isinstance(doc, Document) else doc)


def _tfidf_row(model: TfidfModel, idf: np.ndarray, tokens: list[str]) -> np.ndarray:
    vec = np.zeros(len(model.vocab))
    for term, count in Counter(tokens).items():
        col = model.vocab.index.get(term)
        if col is not None:
            vec[col] = count * idf[col]
    if model.config.l2_normalize:
        norm = float(np.linalg.norm(vec))
        if norm > 0.0:
            vec /= norm
    return vec


def transform_tfidf(model: TfidfModel, doc: Union[Document, str]) -> np.ndarray:
    """Raw term count times smoothed idf ln((1+N)/(1+df)) + 1; unseen terms
    contribute nothing; optional L2 normalization (zero vectors stay zero)."""
    return _tfidf_row(model, _idf(model), _doc_tokens(doc))


def fit_ppmi(corpus: Corpus) -> PpmiModel:
    """Freeze the corpus term distribution p(t) = count(t) / total tokens."""
    if len(corpus) == 0:
        raise ValueError("cannot fit PPMI on an empty corpus")
    counts: Counter = Counter()
    doc_freqs: Counter = Counter()
    for doc in corpus:
        tokens = tokenize_words(doc.text)
        counts.update(tokens)
        doc_freqs.update(set(tokens))
    total = sum(counts.values())
    if total == 0:
        raise ValueError("cannot fit PPMI on a corpus with no tokens")
    vocab = Vocabulary.from_doc_freqs(doc_freqs)
    term_prob = {t: counts[t] / total for t in vocab.terms}
    return PpmiModel(vocab=vocab, term_prob=term_prob, total_count=total)


def transform_ppmi(model: PpmiModel, doc: Union[Document, str]) -> np.ndarray:
    """Positive PMI of the document's empirical term distribution against the
    corpus distribution: max(0, ln(p(t|doc) / p(t))). Out-of-vocabulary tokens
    are excluded from both the counts and the document length; a document with
    no in-vocabulary tokens maps to the zero vector."""
    tokens = [t for t in _doc_tokens(doc) if t in model.vocab.index]
    vec = np.zeros(len(model.vocab))
    if not tokens:
        return vec
    length = len(tokens)
    for term, count in Counter(tokens).items():
        value = math.log((count / length) / model.term_prob[term])
        if value > 0.0:
            vec[model.vocab.index[term]] = value
    return vec


def load_embeddings(path) -> EmbeddingSet:
    """Read {"id", "vector"} JSON lines into an EmbeddingSet. A first line
    holding a {"_meta": ...} header object is skipped. Dimensions must agree,
    ids must be unique, values must be finite."""
    vectors: dict[str, np.ndarray] = {}
    dim: Optional[int] = None
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            where = f"{path}: line {line_no}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{where}: invalid JSON: {exc.msg}") from exc
            if line_no == 1 and isinstance(obj, dict) and "_meta" in obj:
                continue
            if not isinstance(obj, dict) or "id" not in obj or "vector" not in obj:
                raise ValueError(f"{where}: expected an object with 'id' and 'vector'")
            doc_id = str(obj["id"])
            if doc_id in vectors:
                raise ValueError(f"{where}: duplicate embedding id {doc_id!r}")
            vec = np.asarray(obj["vector"], dtype=float)
            if vec.ndim != 1 or vec.size == 0:
                raise ValueError(f"{where}: vector must be a non-empty flat list")
            if not np.isfinite(vec).all():
                raise ValueError(f"{where}: vector contains non-finite values")
            if dim is None:
                dim = int(vec.size)
            elif vec.size != dim:
                raise ValueError(
                    f"{where}: dimension mismatch: expected {dim}, got {vec.size}"
                )
            vectors[doc_id] = vec
    if dim is None:
        raise ValueError(f"{path}: no embedding rows found")
    return EmbeddingSet(dim=dim, vectors=vectors)


def featurize(corpus: Corpus, featurizer: Featurizer) -> FeatureMatrix:
    """Transform every document; rows follow corpus order exactly."""
    if isinstance(featurizer, TfidfModel):
        idf = _idf(featurizer)
        rows = [_tfidf_row(featurizer, idf, tokenize_words(d.text)) for d in corpus]
        width = len(featurizer.vocab)
    elif isinstance(featurizer, PpmiModel):
        rows = [transform_ppmi(featurizer, d) for d in corpus]
        width = len(featurizer.vocab)
    elif isinstance(featurizer, EmbeddingSet):
        for doc in corpus:
            if doc.id not in featurizer.vectors:
                raise ValueError(f"no embedding for document id {doc.id!r}")
        rows = [featurizer.vectors[d.id] for d in corpus]
        width = featurizer.dim
    else:
        raise TypeError(f"unsupported featurizer type {type(featurizer).__name__}")
    values = np.vstack(rows) if rows else np.zeros((0, width))
    return FeatureMatrix(
        row_ids=tuple(d.id for d in corpus),
        values=np.ascontiguousarray(values, dtype=float),
    )


def featurizer_to_dict(featurizer: Union[TfidfModel, PpmiModel]) -> dict:
    """JSON-ready snapshot of a fitted featurizer; exact round-trip."""
    if isinstance(featurizer, TfidfModel):
        return {
            "kind": "tfidf",
            "n_docs_fit": featurizer.n_docs_fit,
            "min_df": featurizer.config.min_df,
            "max_features": featurizer.config.max_features,
            "l2_normalize": featurizer.config.l2_normalize,
            "terms": list(featurizer.vocab.terms),
            "doc_freq": [featurizer.vocab.doc_freq[t] for t in featurizer.vocab.terms],
        }
    if isinstance(featurizer, PpmiModel):
        return {
            "kind": "ppmi",
            "total_count": featurizer.total_count,
            "terms": list(featurizer.vocab.terms),
            "doc_freq": [featurizer.vocab.doc_freq[t] for t in featurizer.vocab.terms],
            "term_prob": [featurizer.term_prob[t] for t in featurizer.vocab.terms],
        }
    raise TypeError(f"cannot serialize featurizer type {type(featurizer).__name__}")


def _rebuild_vocab(terms: list[str], doc_freq: list[int]) -> Vocabulary:
    terms_t = tuple(terms)
    return Vocabulary(
        terms=terms_t,
        index={t: i for i, t in enumerate(terms_t)},
        doc_freq=dict(zip(terms_t, doc_freq)),
    )


def featurizer_from_dict(data: Mapping) -> Union[TfidfModel, PpmiModel]:
    kind = data.get("kind")
    if kind == "tfidf":
        return TfidfModel(
            vocab=_rebuild_vocab(data["terms"], data["doc_freq"]),
            n_docs_fit=data["n_docs_fit"],
            config=TfidfConfig(
                min_df=data["min_df"],
                max_features=data["max_features"],
                l2_normalize=data["l2_normalize"],
            ),
        )
    if kind == "ppmi":
        return PpmiModel(
            vocab=_rebuild_vocab(data["terms"], data["doc_freq"]),
            term_prob=dict(zip(data["terms"], data["term_prob"])),
            total_count=data["total_count"],
        )
    raise ValueError(f"unknown featurizer kind {kind!r}")
