"""Text normalization, tokenization, and n-gram helpers.

Every component that compares strings (index build, tagging, ranking,
matcher inputs) goes through these functions so the conventions stay
consistent: lowercase, single spaces, punctuation split into its own
tokens.
"""

from __future__ import annotations

import re

#: word runs, or any single non-space punctuation character
_TOKEN_RE = re.compile(r"\w+|[^\w\s]")

#: placeholder token standing in for the mention inside a pattern
MENTION_PLACEHOLDER = "<m>"


def normalize_text(text: str) -> str:
    """Lowercase and collapse all whitespace runs to single spaces."""
    return " ".join(text.lower().split())


def tokenize(text: str) -> list[str]:
    """Lowercase tokens; punctuation characters become their own tokens."""
    return _TOKEN_RE.findall(text.lower())


def ngrams(tokens: list[str] | tuple[str, ...], max_n: int) -> list[str]:
    """All space-joined n-grams of `tokens` for n = 1..min(max_n, len).

    Order: by n, then by start position. Duplicates are kept; callers
    that need a set can dedupe.
    """
    if max_n < 1:
        raise ValueError(f"max_n must be >= 1, got {max_n}")
    out = []
    top = min(max_n, len(tokens))
    for n in range(1, top + 1):
        for i in range(len(tokens) - n + 1):
            out.append(" ".join(tokens[i : i + n]))
    return out
