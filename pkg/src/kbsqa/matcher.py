"""Joint-scoring matcher networks and their training losses.

A matcher maps a (left, right) symbol-sequence pair straight to a real
similarity score. The pair is fused by concatenation around a reserved
SEP symbol, then pushed through embed, two convolution blocks, a
max-pool over positions, and an affine head. A character-level matcher
compares mention and subject strings; a word-level matcher compares the
question pattern and the relation name. Both share this module.

Two training losses operate on grouped scores: a pairwise hinge
(ranking_loss) and a group-aggregated hinge (well_order_loss) whose
pre-hinge value equals the pairwise sum in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .nn import (
    Conv1dSpec,
    adaptive_max_pool1,
    adaptive_max_pool1_backward,
    affine,
    affine_backward,
    conv1d,
    conv1d_backward,
    embed,
    embed_backward,
    relu,
    relu_backward,
)
from .text import tokenize

UNK_SYMBOL = "<unk>"
SEP_SYMBOL = "<sep>"
UNK_ID = 0
SEP_ID = 1

PARAM_ORDER = (
    "embedding",
    "conv1_weight",
    "conv1_bias",
    "conv2_weight",
    "conv2_bias",
    "head_weight",
    "head_bias",
)


@dataclass(frozen=True)
class SymbolTable:
    """Ordered symbol inventory with reserved UNK (id 0) and SEP (id 1)."""

    symbols: tuple[str, ...]
    index: dict[str, int] = field(repr=False)

    def __post_init__(self) -> None:
        if self.symbols[:2] != (UNK_SYMBOL, SEP_SYMBOL):
            raise ValueError("symbols must start with the reserved UNK and SEP entries")

    @classmethod
    def from_symbols(cls, corpus_symbols: Iterable[str]) -> "SymbolTable":
        distinct = sorted(set(corpus_symbols) - {UNK_SYMBOL, SEP_SYMBOL})
        symbols = (UNK_SYMBOL, SEP_SYMBOL, *distinct)
        return cls(symbols=symbols, index={s: i for i, s in enumerate(symbols)})

    @property
    def size(self) -> int:
        return len(self.symbols)

    def encode(self, sequence: Sequence[str]) -> np.ndarray:
        """Map symbols to ids, unknown symbols to UNK_ID."""
        return np.array([self.index.get(s, UNK_ID) for s in sequence], dtype=np.int64)


def build_alphabet(texts: Iterable[str]) -> SymbolTable:
    """Character inventory over lowercased texts."""
    chars: set[str] = set()
    for text in texts:
        chars.update(text.lower())
    return SymbolTable.from_symbols(chars)


def build_word_vocabulary(texts: Iterable[str]) -> SymbolTable:
    """Word-token inventory over tokenized texts."""
    words: set[str] = set()
    for text in texts:
        words.update(tokenize(text))
    return SymbolTable.from_symbols(words)


@dataclass(frozen=True)
class MatcherConfig:
    """Architecture of one matcher net over a given vocabulary."""

    mode: str
    embed_dim: int
    conv1: Conv1dSpec
    conv2: Conv1dSpec
    vocabulary: SymbolTable

    def __post_init__(self) -> None:
        if self.mode not in ("char", "word"):
            raise ValueError(f"mode must be 'char' or 'word', got {self.mode!r}")
        if self.conv1.in_channels != self.embed_dim:
            raise ValueError(
                f"conv1 expects {self.conv1.in_channels} input channels, "
                f"embedding provides {self.embed_dim}"
            )
        if self.conv2.in_channels != self.conv1.out_channels:
            raise ValueError(
                f"conv2 expects {self.conv2.in_channels} input channels, "
                f"conv1 provides {self.conv1.out_channels}"
            )


# (embed_dim, conv1 out, conv2 out); kernel 3, stride 1, padding 1 throughout.
_PRESET_DIMS = {
    "paper-char": (60, 300, 60),
    "paper-word": (300, 1500, 300),
    "desk-char": (16, 32, 16),
    "desk-word": (16, 32, 16),
}

PRESET_NAMES = tuple(_PRESET_DIMS)


def preset_config(name: str, vocabulary: SymbolTable) -> MatcherConfig:
    """Named architecture preset bound to a concrete vocabulary.

    The 'paper' presets are the full-scale configurations (char 60-dim
    embeddings with 300-to-60 channels, word 300-dim with 1500-to-300);
    the 'desk' presets shrink every width for fast experiments.
    """
    if name not in _PRESET_DIMS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(_PRESET_DIMS)}")
    embed_dim, c1, c2 = _PRESET_DIMS[name]
    return MatcherConfig(
        mode=name.rsplit("-", 1)[1],
        embed_dim=embed_dim,
        conv1=Conv1dSpec(embed_dim, c1, kernel_size=3, stride=1, padding=1),
        conv2=Conv1dSpec(c1, c2, kernel_size=3, stride=1, padding=1),
        vocabulary=vocabulary,
    )


class JointMatcher:
    """Scores a symbol-sequence pair with one scalar network pass.

    Parameters live in a name-to-array dict; weights draw from a seeded
    uniform in plus/minus 1/sqrt(fan-in) and biases start at zero, so a
    configuration and seed fully determine the initial state.
    """

    def __init__(self, config: MatcherConfig, seed: int = 0):
        self.config = config
        rng = np.random.default_rng(seed)

        def uniform(shape: tuple[int, ...], fan_in: int) -> np.ndarray:
            bound = 1.0 / np.sqrt(fan_in)
            return rng.uniform(-bound, bound, size=shape)

        v, d = config.vocabulary.size, config.embed_dim
        c1, c2 = config.conv1, config.conv2
        self.params: dict[str, np.ndarray] = {
            "embedding": uniform((v, d), d),
            "conv1_weight": uniform(
                (c1.out_channels, c1.in_channels, c1.kernel_size),
                c1.in_channels * c1.kernel_size,
            ),
            "conv1_bias": np.zeros(c1.out_channels),
            "conv2_weight": uniform(
                (c2.out_channels, c2.in_channels, c2.kernel_size),
                c2.in_channels * c2.kernel_size,
            ),
            "conv2_bias": np.zeros(c2.out_channels),
            "head_weight": uniform((1, c2.out_channels), c2.out_channels),
            "head_bias": np.zeros(1),
        }

    def encode_pair(self, left: Sequence[str], right: Sequence[str]) -> np.ndarray:
        if len(left) == 0 or len(right) == 0:
            raise ValueError("both sides of a pair must be non-empty")
        vocab = self.config.vocabulary
        return np.concatenate(
            [vocab.encode(left), np.array([SEP_ID], dtype=np.int64), vocab.encode(right)]
        )

    def score(self, left: Sequence[str], right: Sequence[str]) -> float:
        score, _ = self.score_with_cache(left, right)
        return score

    def score_with_cache(
        self, left: Sequence[str], right: Sequence[str]
    ) -> tuple[float, dict]:
        """Forward pass keeping the intermediates backward() needs."""
        p = self.params
        ids = self.encode_pair(left, right)
        x = np.ascontiguousarray(embed(ids, p["embedding"]).T)
        h1 = conv1d(x, self.config.conv1, p["conv1_weight"], p["conv1_bias"])
        a1 = relu(h1)
        h2 = conv1d(a1, self.config.conv2, p["conv2_weight"], p["conv2_bias"])
        pooled, argmax = adaptive_max_pool1(h2)
        out = affine(pooled, p["head_weight"], p["head_bias"])
        cache = {
            "ids": ids,
            "x": x,
            "h1": h1,
            "a1": a1,
            "h2_shape": h2.shape,
            "argmax": argmax,
            "pooled": pooled,
        }
        return float(out[0]), cache

    def backward(self, cache: dict, grad_score: float = 1.0) -> dict[str, np.ndarray]:
        """Gradients of grad_score * score with respect to every parameter."""
        p = self.params
        grad_out = np.array([grad_score], dtype=np.float64)
        grad_pooled, grad_head_w, grad_head_b = affine_backward(
            cache["pooled"], p["head_weight"], grad_out
        )
        grad_h2 = adaptive_max_pool1_backward(
            cache["h2_shape"], cache["argmax"], grad_pooled
        )
        grad_a1, grad_c2w, grad_c2b = conv1d_backward(
            cache["a1"], self.config.conv2, p["conv2_weight"], grad_h2
        )
        grad_h1 = relu_backward(cache["h1"], grad_a1)
        grad_x, grad_c1w, grad_c1b = conv1d_backward(
            cache["x"], self.config.conv1, p["conv1_weight"], grad_h1
        )
        grad_embedding = embed_backward(
            cache["ids"], p["embedding"].shape, grad_x.T
        )
        return {
            "embedding": grad_embedding,
            "conv1_weight": grad_c1w,
            "conv1_bias": grad_c1b,
            "conv2_weight": grad_c2w,
            "conv2_bias": grad_c2b,
            "head_weight": grad_head_w,
            "head_bias": grad_head_b,
        }

    def parameter_list(self) -> list[np.ndarray]:
        """Parameters in the declared checkpoint order."""
        return [self.params[name] for name in PARAM_ORDER]

    def parameter_shapes(self) -> list[tuple[int, ...]]:
        return [self.params[name].shape for name in PARAM_ORDER]

    def load_parameter_list(self, tensors: Sequence[np.ndarray]) -> None:
        if len(tensors) != len(PARAM_ORDER):
            raise ValueError(
                f"expected {len(PARAM_ORDER)} tensors, got {len(tensors)}"
            )
        for name, tensor in zip(PARAM_ORDER, tensors):
            if tensor.shape != self.params[name].shape:
                raise ValueError(
                    f"tensor for {name!r} has shape {tensor.shape}, "
                    f"expected {self.params[name].shape}"
                )
            self.params[name] = np.array(tensor, dtype=np.float64)


def score_pair(left: Sequence[str], right: Sequence[str], model: JointMatcher) -> float:
    """Similarity score for one joint (left, right) pair."""
    return model.score(left, right)


def match_distribution(scores: Sequence[float]) -> np.ndarray:
    """Stable softmax over a score vector; diagnostic, never trained through."""
    arr = np.asarray(scores, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("scores must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError("scores must be finite")
    shifted = np.exp(arr - arr.max())
    return shifted / shifted.sum()


@dataclass(frozen=True)
class ScoreGroup:
    """Positive and negative match scores for one question side."""

    positives: tuple[float, ...]
    negatives: tuple[float, ...]

    def __post_init__(self) -> None:
        for values in (self.positives, self.negatives):
            if values and not np.all(np.isfinite(values)):
                raise ValueError("scores must be finite")


def _check_margin(margin: float) -> None:
    if not margin > 0:
        raise ValueError(f"margin must be > 0, got {margin}")


def ranking_loss(group: ScoreGroup, margin: float) -> float:
    """Pairwise hinge: sum over (s+, s-) pairs of [s- - s+ + margin]+."""
    _check_margin(margin)
    if not group.positives or not group.negatives:
        return 0.0
    pos = np.asarray(group.positives)
    neg = np.asarray(group.negatives)
    return float(np.maximum(0.0, neg[None, :] - pos[:, None] + margin).sum())


def _well_order_term(group: ScoreGroup, margin: float) -> float:
    if not group.positives or not group.negatives:
        return 0.0
    n_pos, n_neg = len(group.positives), len(group.negatives)
    raw = (
        n_pos * sum(group.negatives)
        - n_neg * sum(group.positives)
        + n_pos * n_neg * margin
    )
    return max(0.0, raw)


def well_order_loss(ms: ScoreGroup, pr: ScoreGroup, margin: float) -> float:
    """Group-aggregated hinge summed over the subject and relation sides.

    Each side contributes [ n+ * sum(S-) - n- * sum(S+) + n+ * n- * margin ]+,
    the closed form of the pairwise hinge sum before rectification.
    """
    _check_margin(margin)
    return _well_order_term(ms, margin) + _well_order_term(pr, margin)


def loss_gradients(
    group: ScoreGroup, margin: float, kind: str = "well_order"
) -> tuple[np.ndarray, np.ndarray]:
    """Per-score gradients (d/dS+, d/dS-) of one group's loss term.

    For an active aggregated hinge every negative receives the positive
    count and every positive receives minus the negative count; a hinge
    exactly at zero takes the zero subgradient.
    """
    _check_margin(margin)
    grad_pos = np.zeros(len(group.positives))
    grad_neg = np.zeros(len(group.negatives))
    if not group.positives or not group.negatives:
        return grad_pos, grad_neg
    if kind == "well_order":
        n_pos, n_neg = len(group.positives), len(group.negatives)
        raw = (
            n_pos * sum(group.negatives)
            - n_neg * sum(group.positives)
            + n_pos * n_neg * margin
        )
        if raw > 0:
            grad_pos[:] = -n_neg
            grad_neg[:] = n_pos
    elif kind == "ranking":
        pos = np.asarray(group.positives)
        neg = np.asarray(group.negatives)
        active = (neg[None, :] - pos[:, None] + margin) > 0
        grad_pos = -active.sum(axis=1).astype(np.float64)
        grad_neg = active.sum(axis=0).astype(np.float64)
    else:
        raise ValueError(f"kind must be 'well_order' or 'ranking', got {kind!r}")
    return grad_pos, grad_neg
