"""Shared fixtures: the bundled datasets loaded once per session.

The toy dataset is the main workhorse: 56 facts, 24 questions, and a
6-dimensional embedding file whose vectors are constructed so that
subject spelling variants align (and distractor variants anti-align)
with the question wording.
"""

from __future__ import annotations

from pathlib import Path

import pytest

from kbsqa import (
    build_index,
    load_embeddings,
    load_facts,
    load_questions,
    with_corpus_frequencies,
)
from kbsqa.text import tokenize

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def toy_kg():
    return load_facts(DATA_DIR / "facts_toy.tsv")


@pytest.fixture(scope="session")
def toy_index(toy_kg):
    return build_index(toy_kg, 1)


@pytest.fixture(scope="session")
def toy_questions():
    return load_questions(DATA_DIR / "questions_toy.tsv")


@pytest.fixture(scope="session")
def toy_embeddings(toy_questions):
    emb = load_embeddings(DATA_DIR / "embeddings_toy.txt")
    return with_corpus_frequencies(emb, [tokenize(q.text) for q in toy_questions])
