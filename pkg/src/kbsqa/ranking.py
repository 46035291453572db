"""Candidate subgraph ranking: literal + semantic relevance scoring.

The literal score is the character-level longest-common-subsequence
length between subject and mention. The semantic score is the log
co-occurrence likelihood of the pair under unit-norm word embeddings:
pairwise dot products between subject and mention words, plus a
mention-only chain of adjacent-word dot products and the first word's
log frequency. The ranking score is their tau-weighted sum.
"""

from __future__ import annotations

from dataclasses import dataclass

from sklearn.base import BaseEstimator

from .embeddings import EmbeddingTable
from .kb import KnowledgeGraph, NGramIndex, build_index, retrieve_candidates
from .tagging import TaggedQuestion
from .text import normalize_text, tokenize
from .validation import check_is_fitted


def lcs_length(a: str, b: str) -> int:
    """Character-level LCS length over lowercased strings.

    Bit-parallel row encoding: one integer carries the DP row for `a`,
    each character of `b` advances it in O(|a|/wordsize) time.
    """
    a = a.lower()
    b = b.lower()
    m = len(a)
    if m == 0 or not b:
        return 0
    masks: dict[str, int] = {}
    bit = 1
    for ch in a:
        masks[ch] = masks.get(ch, 0) | bit
        bit <<= 1
    full = (1 << m) - 1
    row = full
    get = masks.get
    for ch in b:
        hits = row & get(ch, 0)
        row = ((row + hits) | (row - hits)) & full
    return m - bin(row).count("1")


def subject_mention_affinity(
    subject_tokens: list[str] | tuple[str, ...],
    mention_tokens: list[str] | tuple[str, ...],
    emb: EmbeddingTable,
) -> float:
    """Sum of dot products between every subject word and every mention word."""
    total = 0.0
    mention_vecs = [emb.vector(w) for w in mention_tokens]
    for sw in subject_tokens:
        sv = emb.vector(sw)
        for mv in mention_vecs:
            total += float(sv @ mv)
    return total


def mention_log_prior(
    mention_tokens: list[str] | tuple[str, ...], emb: EmbeddingTable
) -> float:
    """Mention-only terms: adjacent-word dot products plus the first word's log frequency."""
    if not mention_tokens:
        raise ValueError("mention_tokens must be non-empty")
    total = emb.log_freq(mention_tokens[0])
    for j in range(len(mention_tokens) - 1):
        total += float(emb.vector(mention_tokens[j + 1]) @ emb.vector(mention_tokens[j]))
    return total


def semantic_log_prob(
    subject_tokens: list[str] | tuple[str, ...],
    mention_tokens: list[str] | tuple[str, ...],
    emb: EmbeddingTable,
) -> float:
    """Log co-occurrence likelihood of a (subject, mention) pair."""
    return subject_mention_affinity(subject_tokens, mention_tokens, emb) + mention_log_prior(
        mention_tokens, emb
    )


def combined_score(s: str, m: str, emb: EmbeddingTable, tau: float) -> float:
    """tau * literal LCS score + (1 - tau) * semantic log likelihood."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must be in [0, 1], got {tau}")
    return tau * lcs_length(s, m) + (1.0 - tau) * semantic_log_prob(
        tokenize(s), tokenize(m), emb
    )


@dataclass(frozen=True)
class RankerConfig:
    tau: float = 0.9
    top_n: int = 50
    candidate_cap: int = 200

    def __post_init__(self) -> None:
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError(f"tau must be in [0, 1], got {self.tau}")
        if self.top_n < 1:
            raise ValueError(f"top_n must be >= 1, got {self.top_n}")
        if self.candidate_cap < self.top_n:
            raise ValueError(
                f"candidate_cap ({self.candidate_cap}) must be >= top_n ({self.top_n})"
            )


@dataclass(frozen=True)
class ScoredEntry:
    fact_id: int
    literal: float
    semantic: float
    combined: float


@dataclass(frozen=True)
class RankedSubgraph:
    """Top-n candidate facts, sorted by combined score (ties: ascending id)."""

    question_id: int
    entries: tuple[ScoredEntry, ...]

    def fact_ids(self) -> list[int]:
        return [e.fact_id for e in self.entries]


def rank_subgraph(
    tq: TaggedQuestion,
    kg: KnowledgeGraph,
    index: NGramIndex,
    emb: EmbeddingTable,
    cfg: RankerConfig,
    question_id: int = -1,
) -> RankedSubgraph:
    """Retrieve, score, and rank candidate facts for a tagged question.

    An empty retrieval yields an empty subgraph (the question will go
    unanswered).
    """
    candidate_ids = retrieve_candidates(index, list(tq.mention_tokens), cfg.candidate_cap)
    mention = tq.mention
    mention_tokens = list(tq.mention_tokens)
    prior = mention_log_prior(mention_tokens, emb) if mention_tokens else 0.0
    entries = []
    for fid in candidate_ids:
        subject = kg.facts[fid].subject
        literal = float(lcs_length(subject, mention))
        semantic = subject_mention_affinity(tokenize(subject), mention_tokens, emb) + prior
        combined = cfg.tau * literal + (1.0 - cfg.tau) * semantic
        entries.append(ScoredEntry(fid, literal, semantic, combined))
    entries.sort(key=lambda e: (-e.combined, e.fact_id))
    return RankedSubgraph(question_id=question_id, entries=tuple(entries[: cfg.top_n]))


def topn_recall(
    ranked: list[RankedSubgraph],
    gold_subjects: list[str],
    n: int,
    kg: KnowledgeGraph,
) -> float:
    """Fraction of questions whose gold subject appears in the top n entries."""
    if len(ranked) != len(gold_subjects):
        raise ValueError(
            f"got {len(ranked)} ranked subgraphs for {len(gold_subjects)} gold subjects"
        )
    if not ranked:
        return 0.0
    hits = 0
    for rs, gold in zip(ranked, gold_subjects):
        want = normalize_text(gold)
        if any(kg.facts[e.fact_id].subject == want for e in rs.entries[:n]):
            hits += 1
    return hits / len(ranked)


class SubgraphRanker(BaseEstimator):
    """Estimator wrapper: fit builds the subject index, transform ranks questions.

    Parameters mirror RankerConfig plus the index n-gram order. After
    ``fit(kg, embeddings)`` the ranker holds the graph, its n-gram index,
    and the embedding table; ``transform`` maps TaggedQuestions to
    RankedSubgraphs and ``rank`` handles a single one.
    """

    def __init__(
        self,
        tau: float = 0.9,
        top_n: int = 50,
        candidate_cap: int = 200,
        max_ngram: int = 1,
    ):
        self.tau = tau
        self.top_n = top_n
        self.candidate_cap = candidate_cap
        self.max_ngram = max_ngram

    def fit(self, kg: KnowledgeGraph, embeddings: EmbeddingTable | None = None):
        if self.max_ngram < 1:
            raise ValueError(f"max_ngram must be >= 1, got {self.max_ngram}")
        self.config_ = RankerConfig(
            tau=self.tau, top_n=self.top_n, candidate_cap=self.candidate_cap
        )
        self.kg_ = kg
        self.index_ = build_index(kg, self.max_ngram)
        self.embeddings_ = embeddings if embeddings is not None else EmbeddingTable(1, {})
        return self

    def rank(self, tq: TaggedQuestion, question_id: int = -1) -> RankedSubgraph:
        check_is_fitted(self, "index_")
        return rank_subgraph(tq, self.kg_, self.index_, self.embeddings_, self.config_, question_id)

    def transform(self, tagged_questions: list[TaggedQuestion]) -> list[RankedSubgraph]:
        check_is_fitted(self, "index_")
        return [self.rank(tq, i) for i, tq in enumerate(tagged_questions)]
