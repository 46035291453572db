"""Word embedding table with unit-norm vectors and corpus log frequencies.

Vectors come from a GloVe-style text file (``word v1 ... vd``) and are
renormalized onto the unit sphere at load. Log relative frequencies are
computed from a token corpus (normally the training questions) with
add-one smoothing; unseen words fall back to the smoothed floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import MissingFileError, ParseError


@dataclass
class EmbeddingTable:
    dim: int
    vectors: dict[str, np.ndarray]
    word_log_freq: dict[str, float] = field(default_factory=dict)
    #: log frequency assigned to words missing from word_log_freq
    floor_log_freq: float = 0.0

    def vector(self, word: str) -> np.ndarray:
        """Unit vector for `word`, or the zero vector when out of vocabulary."""
        vec = self.vectors.get(word)
        if vec is None:
            return np.zeros(self.dim)
        return vec

    def log_freq(self, word: str) -> float:
        return self.word_log_freq.get(word, self.floor_log_freq)


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Load a GloVe-layout text file, renormalizing every vector to unit norm."""
    path = Path(path)
    if not path.exists():
        raise MissingFileError(str(path))
    vectors: dict[str, np.ndarray] = {}
    dim = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            word, values = parts[0], parts[1:]
            if dim == 0:
                dim = len(values)
                if dim == 0:
                    raise ParseError(f"{path}:{lineno}: no vector components")
            elif len(values) != dim:
                raise ParseError(
                    f"{path}:{lineno}: expected {dim} components, got {len(values)}"
                )
            vec = np.array([float(v) for v in values])
            norm = float(np.linalg.norm(vec))
            if norm > 0:
                vec = vec / norm
            vectors[word] = vec
    return EmbeddingTable(dim=dim, vectors=vectors)


def word_log_frequencies(token_lists: list[list[str]]) -> tuple[dict[str, float], float]:
    """Add-one smoothed log relative frequencies over a token corpus.

    Returns the per-word table and the floor value for unseen words,
    ln(1 / (corpus size + vocabulary size)).
    """
    counts: dict[str, int] = {}
    total = 0
    for tokens in token_lists:
        for tok in tokens:
            counts[tok] = counts.get(tok, 0) + 1
            total += 1
    denom = total + len(counts)
    if denom == 0:
        return {}, 0.0
    log_freq = {w: math.log((c + 1) / denom) for w, c in counts.items()}
    return log_freq, math.log(1.0 / denom)


def with_corpus_frequencies(
    emb: EmbeddingTable, token_lists: list[list[str]]
) -> EmbeddingTable:
    """Return a copy of `emb` carrying frequencies computed from the corpus."""
    log_freq, floor = word_log_frequencies(token_lists)
    return EmbeddingTable(
        dim=emb.dim,
        vectors=emb.vectors,
        word_log_freq=log_freq,
        floor_log_freq=floor,
    )
