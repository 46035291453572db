"""Knowledge-graph simple question answering.

Two-step pipeline: rank a candidate subgraph for the question's mention
with a combined literal/semantic score, then pick the answering fact
with a pair of jointly trained convolutional matchers.
"""

from .embeddings import (
    EmbeddingTable,
    load_embeddings,
    with_corpus_frequencies,
    word_log_frequencies,
)
from .errors import (
    CheckpointError,
    ConfigError,
    KbsqaError,
    MissingFileError,
    NotFittedError,
    OptimizerError,
    ParseError,
    TaggingError,
    TrainingError,
)
from .kb import (
    Fact,
    KnowledgeGraph,
    NGramIndex,
    build_index,
    contains_fact,
    load_facts,
    retrieve_candidates,
)
from .matcher import (
    JointMatcher,
    MatcherConfig,
    ScoreGroup,
    SymbolTable,
    build_alphabet,
    build_word_vocabulary,
    loss_gradients,
    match_distribution,
    preset_config,
    ranking_loss,
    score_pair,
    well_order_loss,
)
from .pipeline import (
    EvalReport,
    JointScoringAnswerer,
    Prediction,
    TrainConfig,
    TrainResult,
    evaluate,
    sample_negatives,
    select_fact,
    train,
)
from .ranking import (
    RankedSubgraph,
    RankerConfig,
    ScoredEntry,
    SubgraphRanker,
    combined_score,
    lcs_length,
    rank_subgraph,
    semantic_log_prob,
    topn_recall,
)
from .tagging import (
    QuestionRecord,
    TaggedQuestion,
    lexicon_tag,
    load_questions,
    oracle_tag,
)

__version__ = "0.1.0"

__all__ = [
    "CheckpointError",
    "ConfigError",
    "EmbeddingTable",
    "EvalReport",
    "Fact",
    "JointMatcher",
    "JointScoringAnswerer",
    "KbsqaError",
    "KnowledgeGraph",
    "MatcherConfig",
    "MissingFileError",
    "NGramIndex",
    "NotFittedError",
    "OptimizerError",
    "ParseError",
    "Prediction",
    "QuestionRecord",
    "RankedSubgraph",
    "RankerConfig",
    "ScoreGroup",
    "ScoredEntry",
    "SubgraphRanker",
    "SymbolTable",
    "TaggedQuestion",
    "TaggingError",
    "TrainConfig",
    "TrainResult",
    "TrainingError",
    "build_alphabet",
    "build_index",
    "build_word_vocabulary",
    "combined_score",
    "contains_fact",
    "evaluate",
    "lcs_length",
    "lexicon_tag",
    "load_embeddings",
    "load_facts",
    "load_questions",
    "loss_gradients",
    "match_distribution",
    "oracle_tag",
    "preset_config",
    "rank_subgraph",
    "ranking_loss",
    "retrieve_candidates",
    "sample_negatives",
    "score_pair",
    "select_fact",
    "semantic_log_prob",
    "topn_recall",
    "train",
    "well_order_loss",
    "with_corpus_frequencies",
    "word_log_frequencies",
]
