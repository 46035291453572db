"""End-to-end orchestration: training, fact selection, and evaluation.

Training walks the question set in batches. Each question contributes
two score groups built from its ranked subgraph: the mention/subject
group scored by the character matcher and the pattern/relation group
scored by the word matcher, each with the gold value as the positive
and per-epoch resampled distinct negatives. The configured loss turns
the groups into per-score gradients, which backpropagate through the
matchers and are applied with one Adam step per batch.

Fact selection scores every candidate in a question's subgraph with
both matchers and takes the argmax of the summed score. Evaluation
counts object, subject, and relation accuracy over all questions;
untaggable and empty-subgraph questions count as wrong, never skipped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .embeddings import EmbeddingTable, with_corpus_frequencies
from .errors import ConfigError, OptimizerError, TaggingError, TrainingError
from .kb import KnowledgeGraph, NGramIndex
from .matcher import (
    JointMatcher,
    MatcherConfig,
    ScoreGroup,
    SymbolTable,
    build_alphabet,
    loss_gradients,
    preset_config,
    ranking_loss,
    well_order_loss,
)
from .nn import AdamState, adam_step
from .ranking import RankedSubgraph, RankerConfig, SubgraphRanker, rank_subgraph, topn_recall
from .tagging import QuestionRecord, TaggedQuestion, oracle_tag
from .text import MENTION_PLACEHOLDER, normalize_text, tokenize
from .validation import check_is_fitted

LOSS_KINDS = ("ranking", "well_order")

DEFAULT_RECALL_NS = (1, 5, 10, 20, 50)


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters; margin is the hinge offset of both losses."""

    epochs: int = 20
    batch_size: int = 32
    negatives_per_question: int = 4
    margin: float = 0.1
    loss_kind: str = "well_order"
    top_n_subgraph: int = 50
    seed: int = 0
    learning_rate: float = 0.01
    # whether batch gradients are summed or averaged before the Adam step
    batch_reduction: str = "sum"
    # stop as soon as an epoch's summed loss reaches exactly zero
    stop_at_zero: bool = False

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.negatives_per_question < 1:
            raise ConfigError(
                f"negatives_per_question must be >= 1, got {self.negatives_per_question}"
            )
        if not self.margin > 0:
            raise ConfigError(f"margin must be > 0, got {self.margin}")
        if self.loss_kind not in LOSS_KINDS:
            raise ConfigError(
                f"loss_kind must be one of {LOSS_KINDS}, got {self.loss_kind!r}"
            )
        if self.top_n_subgraph < 1:
            raise ConfigError(f"top_n_subgraph must be >= 1, got {self.top_n_subgraph}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_reduction not in ("sum", "mean"):
            raise ConfigError(
                f"batch_reduction must be 'sum' or 'mean', got {self.batch_reduction!r}"
            )

    def ranker_config(self, tau: float = 0.9) -> RankerConfig:
        cap = max(200, self.top_n_subgraph)
        return RankerConfig(tau=tau, top_n=self.top_n_subgraph, candidate_cap=cap)


@dataclass(frozen=True)
class Prediction:
    """Answer for one question: the selected fact and its score breakdown.

    fact_id is None when no fact could be selected; `failure` then names
    the reason ("untaggable" or "empty-subgraph") and the scores are 0.
    """

    question_id: int
    fact_id: int | None
    subject_score: float
    relation_score: float
    combined: float
    failure: str | None = None


@dataclass(frozen=True)
class EvalReport:
    """Accuracy and recall summary over a full question set."""

    object_accuracy: float
    subject_accuracy: float
    relation_accuracy: float
    topn_recalls: dict[int, float]
    untaggable_count: int
    empty_subgraph_count: int
    total_questions: int


@dataclass(frozen=True)
class GradientWeightRecord:
    """Logged per-question loss-gradient weights for one epoch.

    The positive-score gradient magnitude of an active aggregated hinge
    equals the group's negative count; inactive hinges log 0.
    """

    question_id: int
    epoch: int
    ms_negative_count: int
    pr_negative_count: int
    ms_positive_grad_magnitude: float
    pr_positive_grad_magnitude: float


@dataclass
class TrainResult:
    char_matcher: JointMatcher
    word_matcher: JointMatcher
    loss_curve: list[float]
    weight_log: list[GradientWeightRecord]
    skipped_question_ids: tuple[int, ...]


def sample_negatives(
    ranked: RankedSubgraph,
    kg: KnowledgeGraph,
    gold_subject: str,
    gold_relation: str,
    k: int,
    seed: int,
    epoch: int = 0,
) -> tuple[list[str], list[str]]:
    """Distinct non-gold subjects and relations from a ranked subgraph.

    Up to k of each, drawn uniformly without replacement from the
    deduplicated candidate values. The draw is a pure function of
    (seed, ranked.question_id, epoch), so an epoch resamples while a
    rerun reproduces.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    gold_subject = normalize_text(gold_subject)
    gold_relation = normalize_text(gold_relation)
    subject_pool: set[str] = set()
    relation_pool: set[str] = set()
    for entry in ranked.entries:
        fact = kg.facts[entry.fact_id]
        if fact.subject != gold_subject:
            subject_pool.add(fact.subject)
        if normalize_text(fact.relation) != gold_relation:
            relation_pool.add(fact.relation)
    rng = np.random.default_rng([seed, ranked.question_id, epoch])

    def draw(pool: set[str]) -> list[str]:
        ordered = sorted(pool)
        if not ordered:
            return []
        take = min(k, len(ordered))
        picks = rng.choice(len(ordered), size=take, replace=False)
        return [ordered[i] for i in picks]

    return draw(subject_pool), draw(relation_pool)


@dataclass(frozen=True)
class _TrainItem:
    question_id: int
    mention: str
    pattern_tokens: tuple[str, ...]
    gold_subject: str
    gold_relation: str
    gold_relation_tokens: tuple[str, ...]
    ranked: RankedSubgraph


def _prepare_items(
    questions: list[QuestionRecord],
    kg: KnowledgeGraph,
    index: NGramIndex,
    emb: EmbeddingTable,
    rcfg: RankerConfig,
) -> tuple[list[_TrainItem], list[int]]:
    items: list[_TrainItem] = []
    skipped: list[int] = []
    for q in questions:
        try:
            tq = oracle_tag(q.text, q.subject)
        except TaggingError:
            skipped.append(q.question_id)
            continue
        ranked = rank_subgraph(tq, kg, index, emb, rcfg, question_id=q.question_id)
        items.append(
            _TrainItem(
                question_id=q.question_id,
                mention=tq.mention,
                pattern_tokens=tq.pattern_tokens,
                gold_subject=q.subject,
                gold_relation=q.relation,
                gold_relation_tokens=tuple(tokenize(q.relation)),
                ranked=ranked,
            )
        )
    return items, skipped


def _score_group(
    matcher: JointMatcher,
    left,
    positive_right,
    negative_rights,
) -> tuple[ScoreGroup, list[dict], list[dict]]:
    """Score one positive and the negatives, keeping backward caches."""
    pos_score, pos_cache = matcher.score_with_cache(left, positive_right)
    neg_scores, neg_caches = [], []
    for right in negative_rights:
        score, cache = matcher.score_with_cache(left, right)
        neg_scores.append(score)
        neg_caches.append(cache)
    group = ScoreGroup(positives=(pos_score,), negatives=tuple(neg_scores))
    return group, [pos_cache], neg_caches


def _zero_grads(matcher: JointMatcher) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(p) for name, p in matcher.params.items()}


def _backprop_group(
    matcher: JointMatcher,
    caches_pos: list[dict],
    caches_neg: list[dict],
    grad_pos: np.ndarray,
    grad_neg: np.ndarray,
    total: dict[str, np.ndarray],
) -> None:
    for cache, weight in zip(caches_pos + caches_neg, np.concatenate([grad_pos, grad_neg])):
        if weight == 0.0:
            continue
        for name, grad in matcher.backward(cache, float(weight)).items():
            total[name] += grad


def train(
    questions: list[QuestionRecord],
    kg: KnowledgeGraph,
    index: NGramIndex,
    emb: EmbeddingTable,
    char_config: MatcherConfig,
    word_config: MatcherConfig,
    cfg: TrainConfig,
    ranker_config: RankerConfig | None = None,
) -> TrainResult:
    """Train both matchers; returns them with the per-epoch loss curve.

    Untaggable questions are skipped for training (their ids are
    reported). A non-finite loss aborts with TrainingError.
    """
    rcfg = ranker_config if ranker_config is not None else cfg.ranker_config()
    items, skipped = _prepare_items(questions, kg, index, emb, rcfg)
    char_matcher = JointMatcher(char_config, seed=cfg.seed)
    word_matcher = JointMatcher(word_config, seed=cfg.seed + 1)
    char_state = AdamState(learning_rate=cfg.learning_rate)
    word_state = AdamState(learning_rate=cfg.learning_rate)
    loss_curve: list[float] = []
    weight_log: list[GradientWeightRecord] = []

    for epoch in range(cfg.epochs):
        epoch_loss = 0.0
        for start in range(0, len(items), cfg.batch_size):
            batch = items[start : start + cfg.batch_size]
            char_grads = _zero_grads(char_matcher)
            word_grads = _zero_grads(word_matcher)
            for item in batch:
                neg_subjects, neg_relations = sample_negatives(
                    item.ranked,
                    kg,
                    item.gold_subject,
                    item.gold_relation,
                    cfg.negatives_per_question,
                    cfg.seed,
                    epoch,
                )
                ms_group, ms_pos_caches, ms_neg_caches = _score_group(
                    char_matcher, item.mention, item.gold_subject, neg_subjects
                )
                pr_group, pr_pos_caches, pr_neg_caches = _score_group(
                    word_matcher,
                    item.pattern_tokens,
                    item.gold_relation_tokens,
                    [tuple(tokenize(r)) for r in neg_relations],
                )
                if cfg.loss_kind == "well_order":
                    q_loss = well_order_loss(ms_group, pr_group, cfg.margin)
                else:
                    q_loss = ranking_loss(ms_group, cfg.margin) + ranking_loss(
                        pr_group, cfg.margin
                    )
                if not np.isfinite(q_loss):
                    raise TrainingError(
                        f"non-finite loss at epoch {epoch}, "
                        f"question {item.question_id}"
                    )
                ms_gp, ms_gn = loss_gradients(ms_group, cfg.margin, cfg.loss_kind)
                pr_gp, pr_gn = loss_gradients(pr_group, cfg.margin, cfg.loss_kind)
                _backprop_group(
                    char_matcher, ms_pos_caches, ms_neg_caches, ms_gp, ms_gn, char_grads
                )
                _backprop_group(
                    word_matcher, pr_pos_caches, pr_neg_caches, pr_gp, pr_gn, word_grads
                )
                weight_log.append(
                    GradientWeightRecord(
                        question_id=item.question_id,
                        epoch=epoch,
                        ms_negative_count=len(ms_group.negatives),
                        pr_negative_count=len(pr_group.negatives),
                        ms_positive_grad_magnitude=float(abs(ms_gp[0])),
                        pr_positive_grad_magnitude=float(abs(pr_gp[0])),
                    )
                )
                epoch_loss += q_loss
            if cfg.batch_reduction == "mean" and batch:
                for grads in (char_grads, word_grads):
                    for name in grads:
                        grads[name] /= len(batch)
            try:
                adam_step(char_matcher.params, char_grads, char_state)
                adam_step(word_matcher.params, word_grads, word_state)
            except OptimizerError as exc:
                raise TrainingError(f"epoch {epoch}: {exc}") from exc
        loss_curve.append(epoch_loss)
        if cfg.stop_at_zero and epoch_loss == 0.0:
            break
    return TrainResult(
        char_matcher=char_matcher,
        word_matcher=word_matcher,
        loss_curve=loss_curve,
        weight_log=weight_log,
        skipped_question_ids=tuple(skipped),
    )


def select_fact(
    tq: TaggedQuestion,
    ranked: RankedSubgraph,
    kg: KnowledgeGraph,
    char_matcher: JointMatcher,
    word_matcher: JointMatcher,
) -> Prediction:
    """Pick the candidate fact with the highest summed matcher score.

    Ties keep the earlier entry, i.e. the better subgraph rank and then
    the lower fact id, matching the subgraph's own ordering.
    """
    if not ranked.entries:
        return Prediction(
            question_id=ranked.question_id,
            fact_id=None,
            subject_score=0.0,
            relation_score=0.0,
            combined=0.0,
            failure="empty-subgraph",
        )
    pattern = tuple(tq.pattern_tokens)
    best: Prediction | None = None
    for entry in ranked.entries:
        fact = kg.facts[entry.fact_id]
        subject_score = char_matcher.score(tq.mention, fact.subject)
        relation_score = word_matcher.score(pattern, tuple(tokenize(fact.relation)))
        combined = subject_score + relation_score
        if best is None or combined > best.combined:
            best = Prediction(
                question_id=ranked.question_id,
                fact_id=entry.fact_id,
                subject_score=subject_score,
                relation_score=relation_score,
                combined=combined,
            )
    return best


def evaluate(
    questions: list[QuestionRecord],
    predictions: list[Prediction],
    kg: KnowledgeGraph,
    ranked: list[RankedSubgraph] | None = None,
    recall_ns: tuple[int, ...] = DEFAULT_RECALL_NS,
) -> EvalReport:
    """Accuracy over all questions; failures count as wrong answers.

    Subject, relation, and object accuracy are counted independently on
    the predicted fact. When the ranked subgraphs are provided, top-n
    recalls are included for each n in recall_ns.
    """
    if len(questions) != len(predictions):
        raise ValueError(
            f"got {len(predictions)} predictions for {len(questions)} questions"
        )
    total = len(questions)
    if total == 0:
        return EvalReport(0.0, 0.0, 0.0, {}, 0, 0, 0)
    object_hits = subject_hits = relation_hits = 0
    untaggable = empty_subgraph = 0
    for q, p in zip(questions, predictions):
        if p.failure == "untaggable":
            untaggable += 1
        elif p.failure == "empty-subgraph":
            empty_subgraph += 1
        if p.fact_id is None:
            continue
        fact = kg.facts[p.fact_id]
        if fact.subject == q.subject:
            subject_hits += 1
        if normalize_text(fact.relation) == normalize_text(q.relation):
            relation_hits += 1
        if normalize_text(fact.object) == normalize_text(q.object):
            object_hits += 1
    recalls: dict[int, float] = {}
    if ranked is not None:
        golds = [q.subject for q in questions]
        recalls = {n: topn_recall(ranked, golds, n, kg) for n in recall_ns}
    return EvalReport(
        object_accuracy=object_hits / total,
        subject_accuracy=subject_hits / total,
        relation_accuracy=relation_hits / total,
        topn_recalls=recalls,
        untaggable_count=untaggable,
        empty_subgraph_count=empty_subgraph,
        total_questions=total,
    )


def eval_report_rows(report: EvalReport) -> list[tuple[str, str]]:
    """(metric, value) rows for the tab-separated report."""
    rows = [
        ("object_accuracy", f"{report.object_accuracy:.6f}"),
        ("subject_accuracy", f"{report.subject_accuracy:.6f}"),
        ("relation_accuracy", f"{report.relation_accuracy:.6f}"),
    ]
    for n in sorted(report.topn_recalls):
        rows.append((f"top_{n}_recall", f"{report.topn_recalls[n]:.6f}"))
    rows.append(("untaggable_count", str(report.untaggable_count)))
    rows.append(("empty_subgraph_count", str(report.empty_subgraph_count)))
    rows.append(("total_questions", str(report.total_questions)))
    return rows


def eval_report_lines(report: EvalReport) -> list[str]:
    """Tab-separated metric lines."""
    return [f"{name}\t{value}" for name, value in eval_report_rows(report)]


def eval_report_summary(report: EvalReport) -> list[str]:
    """Line-oriented key=value rendering of the same metrics."""
    return [f"{name}={value}" for name, value in eval_report_rows(report)]


def loss_curve_lines(curve: list[float]) -> list[str]:
    """One "epoch<TAB>loss" line per training epoch."""
    return [f"{epoch}\t{loss!r}" for epoch, loss in enumerate(curve)]


def build_matcher_vocabularies(
    questions: list[QuestionRecord], kg: KnowledgeGraph
) -> tuple[SymbolTable, SymbolTable]:
    """Corpus-derived alphabet and word vocabulary for the two matchers.

    The alphabet covers question and subject characters; the word
    vocabulary covers question and relation tokens plus the mention
    placeholder.
    """
    alphabet = build_alphabet(
        [q.text for q in questions] + [f.subject for f in kg.facts]
    )
    words: set[str] = {MENTION_PLACEHOLDER}
    for q in questions:
        words.update(tokenize(q.text))
    for f in kg.facts:
        words.update(tokenize(f.relation))
    word_vocab = SymbolTable.from_symbols(words)
    return alphabet, word_vocab


class JointScoringAnswerer(BaseEstimator):
    """End-to-end question answerer: rank a subgraph, pick the best fact.

    fit() builds the ranker over the knowledge graph, derives matcher
    vocabularies from the training questions, and trains both matchers.
    predict() maps question records to Predictions; score() returns
    object accuracy, the end-to-end answer accuracy.
    """

    def __init__(
        self,
        preset: str = "desk",
        loss_kind: str = "well_order",
        epochs: int = 20,
        batch_size: int = 32,
        negatives_per_question: int = 4,
        margin: float = 0.1,
        learning_rate: float = 0.01,
        tau: float = 0.9,
        top_n: int = 50,
        candidate_cap: int = 200,
        max_ngram: int = 1,
        seed: int = 0,
        stop_at_zero: bool = False,
    ):
        self.preset = preset
        self.loss_kind = loss_kind
        self.epochs = epochs
        self.batch_size = batch_size
        self.negatives_per_question = negatives_per_question
        self.margin = margin
        self.learning_rate = learning_rate
        self.tau = tau
        self.top_n = top_n
        self.candidate_cap = candidate_cap
        self.max_ngram = max_ngram
        self.seed = seed
        self.stop_at_zero = stop_at_zero

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            negatives_per_question=self.negatives_per_question,
            margin=self.margin,
            loss_kind=self.loss_kind,
            top_n_subgraph=self.top_n,
            seed=self.seed,
            learning_rate=self.learning_rate,
            stop_at_zero=self.stop_at_zero,
        )

    def fit(
        self,
        questions: list[QuestionRecord],
        kg: KnowledgeGraph,
        embeddings: EmbeddingTable | None = None,
    ):
        if self.preset not in ("paper", "desk"):
            raise ConfigError(f"preset must be 'paper' or 'desk', got {self.preset!r}")
        cfg = self._train_config()
        base = embeddings if embeddings is not None else EmbeddingTable(1, {})
        emb = with_corpus_frequencies(base, [tokenize(q.text) for q in questions])
        self.ranker_ = SubgraphRanker(
            tau=self.tau,
            top_n=self.top_n,
            candidate_cap=max(self.candidate_cap, self.top_n),
            max_ngram=self.max_ngram,
        ).fit(kg, emb)
        alphabet, word_vocab = build_matcher_vocabularies(questions, kg)
        self.char_config_ = preset_config(f"{self.preset}-char", alphabet)
        self.word_config_ = preset_config(f"{self.preset}-word", word_vocab)
        result = train(
            questions,
            kg,
            self.ranker_.index_,
            emb,
            self.char_config_,
            self.word_config_,
            cfg,
            ranker_config=self.ranker_.config_,
        )
        self.kg_ = kg
        self.embeddings_ = emb
        self.char_matcher_ = result.char_matcher
        self.word_matcher_ = result.word_matcher
        self.loss_curve_ = result.loss_curve
        self.weight_log_ = result.weight_log
        self.skipped_question_ids_ = result.skipped_question_ids
        return self

    def _predict_one(self, q: QuestionRecord) -> tuple[Prediction, RankedSubgraph]:
        empty = RankedSubgraph(question_id=q.question_id, entries=())
        try:
            tq = oracle_tag(q.text, q.subject)
        except TaggingError:
            return (
                Prediction(q.question_id, None, 0.0, 0.0, 0.0, failure="untaggable"),
                empty,
            )
        ranked = self.ranker_.rank(tq, q.question_id)
        return (
            select_fact(tq, ranked, self.kg_, self.char_matcher_, self.word_matcher_),
            ranked,
        )

    def predict(self, questions: list[QuestionRecord]) -> list[Prediction]:
        check_is_fitted(self, "char_matcher_", "word_matcher_")
        return [self._predict_one(q)[0] for q in questions]

    def evaluate_on(
        self,
        questions: list[QuestionRecord],
        recall_ns: tuple[int, ...] = DEFAULT_RECALL_NS,
    ) -> EvalReport:
        check_is_fitted(self, "char_matcher_", "word_matcher_")
        pairs = [self._predict_one(q) for q in questions]
        predictions = [p for p, _ in pairs]
        ranked = [r for _, r in pairs]
        return evaluate(questions, predictions, self.kg_, ranked, recall_ns)

    def score(self, questions: list[QuestionRecord]) -> float:
        """Object accuracy on `questions` (the end-to-end answer accuracy)."""
        return self.evaluate_on(questions).object_accuracy
