"""Knowledge-graph storage: fact loading, n-gram indexing, and retrieval.

Facts live in a TSV file, one ``subject<TAB>relation<TAB>object`` triple
per line ('#' lines are comments). Subjects are normalized at load time;
an inverted index from subject n-grams to fact ids answers mention
lookups. Both structures are built once and treated as immutable, so
concurrent readers are safe.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import MissingFileError, ParseError
from .text import ngrams, normalize_text, tokenize


@dataclass(frozen=True)
class Fact:
    """One (subject, relation, object) triple; id is the 0-based file position."""

    id: int
    subject: str
    relation: str
    object: str


@dataclass
class KnowledgeGraph:
    facts: list[Fact]
    subjects: frozenset[str] = field(init=False)
    relations: frozenset[str] = field(init=False)

    def __post_init__(self) -> None:
        self.subjects = frozenset(f.subject for f in self.facts)
        self.relations = frozenset(f.relation for f in self.facts)
        self._triples = {
            (normalize_text(f.subject), normalize_text(f.relation), normalize_text(f.object))
            for f in self.facts
        }

    def __len__(self) -> int:
        return len(self.facts)


@dataclass
class NGramIndex:
    """Inverted map from subject n-grams to sorted, deduplicated fact ids."""

    max_n: int
    postings: dict[str, list[int]]


def load_facts(path: str | Path) -> KnowledgeGraph:
    """Read a facts TSV file into a KnowledgeGraph.

    Subjects are normalized (lowercase, collapsed whitespace); relations
    and objects are stored stripped but otherwise verbatim. Raises
    ParseError on a line with the wrong field count or an empty field.
    """
    path = Path(path)
    if not path.exists():
        raise MissingFileError(str(path))
    facts: list[Fact] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise ParseError(
                    f"{path}:{lineno}: expected 3 tab-separated fields, got {len(fields)}"
                )
            subject, relation, obj = (f.strip() for f in fields)
            if not (normalize_text(subject) and relation and obj):
                raise ParseError(f"{path}:{lineno}: empty field")
            facts.append(
                Fact(id=len(facts), subject=normalize_text(subject),
                     relation=relation, object=obj)
            )
    return KnowledgeGraph(facts)


def build_index(kg: KnowledgeGraph, max_n: int) -> NGramIndex:
    """Index every n-gram (n <= max_n) of every subject to its fact ids."""
    if max_n < 1:
        raise ValueError(f"max_n must be >= 1, got {max_n}")
    postings: dict[str, set[int]] = {}
    for fact in kg.facts:
        for gram in set(ngrams(tokenize(fact.subject), max_n)):
            postings.setdefault(gram, set()).add(fact.id)
    return NGramIndex(
        max_n=max_n,
        postings={gram: sorted(ids) for gram, ids in postings.items()},
    )


def retrieve_candidates(
    index: NGramIndex, mention: list[str], cap: int = 200
) -> list[int]:
    """Union of postings over the mention's n-grams, ascending fact id.

    The result is truncated to the first `cap` ids; "first" means lowest
    fact id, which keeps retrieval deterministic.
    """
    if not mention:
        raise ValueError("mention must be non-empty")
    if cap < 1:
        raise ValueError(f"cap must be >= 1, got {cap}")
    hits: set[int] = set()
    for gram in set(ngrams(mention, index.max_n)):
        posting = index.postings.get(gram)
        if posting:
            hits.update(posting)
    return sorted(hits)[:cap]


def contains_fact(kg: KnowledgeGraph, s: str, r: str, o: str) -> bool:
    """True iff the normalized triple is present in the graph."""
    return (normalize_text(s), normalize_text(r), normalize_text(o)) in kg._triples
