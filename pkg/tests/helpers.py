"""Shared builders for boundary-detection tests.

Documents are synthesized as a human-like prefix drawn from one Zipf-shaped
token distribution followed by a machine-like suffix drawn from a rotated
copy of it, with the gold label at the switch point. Paragraph breaks fall
every few tokens and at the boundary itself, so paragraph snapping has
something real to snap to.
"""

import numpy as np

from mgtkit.corpus import Corpus, Document, LabelScheme


def make_boundary_corpus(
    n_docs,
    seed,
    min_len=60,
    max_len=200,
    vocab_size=50,
    paragraph_every=12,
    id_prefix="doc",
):
    rng = np.random.default_rng(seed)
    vocab = np.array([f"w{k:02d}" for k in range(vocab_size)])
    ranks = np.arange(1, vocab_size + 1, dtype=float)
    probs_human = (1.0 / ranks) / (1.0 / ranks).sum()
    probs_machine = np.roll(probs_human, vocab_size // 2)

    docs = []
    for k in range(n_docs):
        length = int(rng.integers(min_len, max_len + 1))
        boundary = int(round(float(rng.uniform(0.1, 0.9)) * length))
        prefix = rng.choice(vocab, size=boundary, p=probs_human)
        suffix = rng.choice(vocab, size=length - boundary, p=probs_machine)
        tokens = list(prefix) + list(suffix)
        breaks = set(range(paragraph_every, length, paragraph_every)) | {boundary}
        parts = [tokens[0]]
        for i, token in enumerate(tokens[1:], start=1):
            parts.append(("\n\n" if i in breaks else " ") + token)
        docs.append(
            Document(id=f"{id_prefix}{k:03d}", text="".join(parts), label=boundary)
        )
    return Corpus(documents=tuple(docs), scheme=LabelScheme.BOUNDARY)


def midpoint_baseline(corpus):
    """Constant per-document guess at half the word count."""
    from mgtkit.boundary import clip_round
    from mgtkit.corpus import tokenize_words

    return {
        doc.id: clip_round(len(tokenize_words(doc.text)) / 2, len(tokenize_words(doc.text)))
        for doc in corpus
    }
