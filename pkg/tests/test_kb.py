"""Fact loading, n-gram indexing, and candidate retrieval."""

import pytest

from kbsqa import (
    KnowledgeGraph,
    MissingFileError,
    ParseError,
    build_index,
    contains_fact,
    load_facts,
    retrieve_candidates,
)
from kbsqa.kb import Fact


def write_facts(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


class TestLoadFacts:
    def test_basic_load(self, tmp_path):
        path = write_facts(
            tmp_path / "facts.tsv",
            ["alpha\trel.one\tfirst", "beta\trel.two\tsecond"],
        )
        kg = load_facts(path)
        assert len(kg) == 2
        assert kg.facts[0] == Fact(0, "alpha", "rel.one", "first")
        assert kg.facts[1].id == 1

    def test_subjects_are_normalized(self, tmp_path):
        path = write_facts(
            tmp_path / "facts.tsv", ["  Rufus   Scrimgeour \trel\tobj"]
        )
        kg = load_facts(path)
        assert kg.facts[0].subject == "rufus scrimgeour"

    def test_relation_and_object_kept_verbatim(self, tmp_path):
        path = write_facts(tmp_path / "facts.tsv", ["s\tRel.Name\tMixed Case Obj"])
        kg = load_facts(path)
        assert kg.facts[0].relation == "Rel.Name"
        assert kg.facts[0].object == "Mixed Case Obj"

    def test_comments_and_blanks_skipped(self, tmp_path):
        path = write_facts(
            tmp_path / "facts.tsv",
            ["# header", "", "a\tr\to", "# tail"],
        )
        assert len(load_facts(path)) == 1

    def test_wrong_field_count(self, tmp_path):
        path = write_facts(tmp_path / "facts.tsv", ["a\tr"])
        with pytest.raises(ParseError, match="3 tab-separated fields"):
            load_facts(path)

    def test_empty_field(self, tmp_path):
        path = write_facts(tmp_path / "facts.tsv", ["a\t\to"])
        with pytest.raises(ParseError, match="empty field"):
            load_facts(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(MissingFileError):
            load_facts(tmp_path / "nope.tsv")

    def test_subject_and_relation_inventories(self, tmp_path):
        path = write_facts(
            tmp_path / "facts.tsv",
            ["a\tr1\to1", "a\tr2\to2", "b\tr1\to3"],
        )
        kg = load_facts(path)
        assert kg.subjects == frozenset({"a", "b"})
        assert kg.relations == frozenset({"r1", "r2"})


class TestContainsFact:
    def test_present_triple(self, tmp_path):
        kg = load_facts(
            write_facts(tmp_path / "f.tsv", ["vega\tastronomy.star\tLyra"])
        )
        assert contains_fact(kg, "Vega", "Astronomy.Star", "lyra")

    def test_absent_triple(self, tmp_path):
        kg = load_facts(write_facts(tmp_path / "f.tsv", ["vega\tr\tlyra"]))
        assert not contains_fact(kg, "vega", "r", "orion")


def graph(*subjects):
    return KnowledgeGraph(
        [Fact(i, s, "rel", "obj") for i, s in enumerate(subjects)]
    )


class TestBuildIndex:
    def test_unigram_postings(self):
        index = build_index(graph("alpha beta", "beta gamma"), 1)
        assert index.postings["beta"] == [0, 1]
        assert index.postings["alpha"] == [0]
        assert "alpha beta" not in index.postings

    def test_bigram_postings(self):
        index = build_index(graph("alpha beta gamma"), 2)
        assert index.postings["alpha beta"] == [0]
        assert index.postings["beta gamma"] == [0]

    def test_repeated_token_deduplicated(self):
        index = build_index(graph("baden baden"), 1)
        assert index.postings["baden"] == [0]

    def test_postings_sorted_ascending(self):
        index = build_index(graph("x a", "x b", "x c"), 1)
        assert index.postings["x"] == [0, 1, 2]

    def test_rejects_nonpositive_max_n(self):
        with pytest.raises(ValueError, match="max_n"):
            build_index(graph("a"), 0)


class TestRetrieveCandidates:
    def test_union_over_mention_grams(self):
        index = build_index(graph("alpha one", "beta two", "gamma three"), 1)
        assert retrieve_candidates(index, ["alpha", "beta"]) == [0, 1]

    def test_ascending_fact_ids(self):
        index = build_index(graph("z common", "a common", "m common"), 1)
        assert retrieve_candidates(index, ["common"]) == [0, 1, 2]

    def test_cap_keeps_lowest_ids(self):
        index = build_index(graph(*(f"shared t{i}" for i in range(10))), 1)
        assert retrieve_candidates(index, ["shared"], cap=3) == [0, 1, 2]

    def test_unknown_gram_yields_empty(self):
        index = build_index(graph("alpha"), 1)
        assert retrieve_candidates(index, ["zzz"]) == []

    def test_rejects_empty_mention(self):
        index = build_index(graph("alpha"), 1)
        with pytest.raises(ValueError, match="mention"):
            retrieve_candidates(index, [])

    def test_rejects_nonpositive_cap(self):
        index = build_index(graph("alpha"), 1)
        with pytest.raises(ValueError, match="cap"):
            retrieve_candidates(index, ["alpha"], cap=0)


def test_toy_retrieval_for_shared_first_name(toy_kg, toy_index):
    # "rufus" appears in two subjects: the book character (fact 0) and
    # the musician (fact 9); retrieval returns exactly those, id order
    assert retrieve_candidates(toy_index, ["rufus", "scrimgeour"]) == [0, 9]
