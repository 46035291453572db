"""Split questions into a mention span and a pattern.

Two taggers are provided. The oracle tagger uses the annotated gold
subject to locate the mention span; the lexicon tagger picks the longest
question span that is present in the subject n-gram index, so it works
on raw questions without annotations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from .errors import MissingFileError, ParseError, TaggingError
from .kb import NGramIndex
from .text import MENTION_PLACEHOLDER, normalize_text, tokenize


@dataclass(frozen=True)
class TaggedQuestion:
    """A question split into mention tokens and a pattern with one "<m>" slot."""

    question: str
    mention_tokens: tuple[str, ...]
    pattern_tokens: tuple[str, ...]

    @property
    def mention(self) -> str:
        return " ".join(self.mention_tokens)


@dataclass(frozen=True)
class QuestionRecord:
    """One line of a questions file: the gold fact plus the question text."""

    question_id: int
    subject: str
    relation: str
    object: str
    text: str


def load_questions(path: str | Path) -> list[QuestionRecord]:
    """Read ``subject<TAB>relation<TAB>object<TAB>question`` lines."""
    path = Path(path)
    if not path.exists():
        raise MissingFileError(str(path))
    records: list[QuestionRecord] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise ParseError(
                    f"{path}:{lineno}: expected 4 tab-separated fields, got {len(fields)}"
                )
            subject, relation, obj, question = (f.strip() for f in fields)
            if not (subject and relation and obj and question):
                raise ParseError(f"{path}:{lineno}: empty field")
            records.append(
                QuestionRecord(
                    question_id=len(records),
                    subject=normalize_text(subject),
                    relation=relation,
                    object=obj,
                    text=question,
                )
            )
    return records


def _make_tagged(question: str, tokens: list[str], start: int, end: int) -> TaggedQuestion:
    pattern = tokens[:start] + [MENTION_PLACEHOLDER] + tokens[end:]
    return TaggedQuestion(
        question=question,
        mention_tokens=tuple(tokens[start:end]),
        pattern_tokens=tuple(pattern),
    )


def _token_lcs(a: list[str], b: list[str]) -> int:
    prev = [0] * (len(b) + 1)
    for i in range(1, len(a) + 1):
        cur = [0] * (len(b) + 1)
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                cur[j] = prev[j - 1] + 1
            else:
                cur[j] = max(prev[j], cur[j - 1])
        prev = cur
    return prev[len(b)]


def oracle_tag(question: str, gold_subject: str) -> TaggedQuestion:
    """Locate the mention using the annotated gold subject.

    A verbatim occurrence of the gold subject's token sequence wins
    outright (earliest if repeated). Otherwise the span maximizing the
    token-level common subsequence with the gold tokens is chosen, among
    spans whose boundary tokens occur in the gold subject; ties go to the
    longer span, then the earlier start. Raises TaggingError when no
    question token overlaps the gold subject.
    """
    tokens = tokenize(question)
    gold = tokenize(normalize_text(gold_subject))
    if not tokens or not gold:
        raise TaggingError(f"empty question or gold subject: {question!r}")
    gold_set = set(gold)
    overlap = [i for i, tok in enumerate(tokens) if tok in gold_set]
    if not overlap:
        raise TaggingError(
            f"no token of {question!r} overlaps gold subject {gold_subject!r}"
        )
    # verbatim occurrence, earliest start
    g = len(gold)
    for start in range(len(tokens) - g + 1):
        if tokens[start : start + g] == gold:
            return _make_tagged(question, tokens, start, start + g)
    best = None  # (lcs, length, -start)
    best_span = (overlap[0], overlap[0] + 1)
    for si, start in enumerate(overlap):
        for end_tok in overlap[si:]:
            end = end_tok + 1
            score = (_token_lcs(tokens[start:end], gold), end - start, -start)
            if best is None or score > best:
                best = score
                best_span = (start, end)
    return _make_tagged(question, tokens, *best_span)


def lexicon_tag(question: str, index: NGramIndex) -> TaggedQuestion:
    """Pick the longest question span that has a posting in the index.

    Ties go to the earliest start. If no span is indexed, falls back to
    the single token with the highest inverse document frequency over
    the indexed subject corpus (earliest on ties).
    """
    tokens = tokenize(question)
    if not tokens:
        raise ValueError(f"empty question: {question!r}")
    for length in range(min(len(tokens), index.max_n), 0, -1):
        for start in range(len(tokens) - length + 1):
            if " ".join(tokens[start : start + length]) in index.postings:
                return _make_tagged(question, tokens, start, start + length)
    # fallback: rarest token under the subject corpus
    n_docs = max(len({i for ids in index.postings.values() for i in ids}), 1)
    best_start = 0
    best_idf = -math.inf
    for i, tok in enumerate(tokens):
        df = len(index.postings.get(tok, ()))
        idf = math.log(n_docs / (1 + df))
        if idf > best_idf:
            best_idf = idf
            best_start = i
    return _make_tagged(question, tokens, best_start, best_start + 1)
