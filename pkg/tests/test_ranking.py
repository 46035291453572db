"""Literal and semantic relevance scoring and subgraph ranking."""

import numpy as np
import pytest

from kbsqa import (
    EmbeddingTable,
    RankerConfig,
    combined_score,
    lcs_length,
    rank_subgraph,
    semantic_log_prob,
    topn_recall,
)
from kbsqa.kb import Fact, KnowledgeGraph, build_index
from kbsqa.ranking import (
    RankedSubgraph,
    ScoredEntry,
    mention_log_prior,
    subject_mention_affinity,
)
from kbsqa.tagging import TaggedQuestion

from oracles import lcs_dp


class TestLcsLength:
    @pytest.mark.parametrize(
        "a, b, want",
        [
            ("abcde", "ace", 3),
            ("abc", "abc", 3),
            ("abc", "xyz", 0),
            ("", "abc", 0),
            ("abc", "", 0),
            ("aggtab", "gxtxayb", 4),
        ],
    )
    def test_known_values(self, a, b, want):
        assert lcs_length(a, b) == want

    def test_case_insensitive(self):
        assert lcs_length("ABC", "abc") == 3

    def test_symmetric(self):
        assert lcs_length("kitten", "sitting") == lcs_length("sitting", "kitten")

    def test_matches_reference_dp_on_random_pairs(self):
        rng = np.random.default_rng(7)
        letters = list("abcdefg ")
        for _ in range(200):
            a = "".join(rng.choice(letters, size=rng.integers(0, 25)))
            b = "".join(rng.choice(letters, size=rng.integers(0, 25)))
            assert lcs_length(a, b) == lcs_dp(a, b)

    def test_long_strings_cross_word_boundary(self):
        # 64+ characters exercises the multi-limb integer row
        a = "x" * 70 + "y"
        b = "y" + "x" * 70
        assert lcs_length(a, b) == lcs_dp(a, b) == 70


def two_axis_table(**log_freq):
    vectors = {
        "north": np.array([1.0, 0.0]),
        "star": np.array([1.0, 0.0]),
        "anti": np.array([-1.0, 0.0]),
        "side": np.array([0.0, 1.0]),
    }
    return EmbeddingTable(2, vectors, dict(log_freq), floor_log_freq=-3.0)


class TestSemanticScore:
    def test_affinity_is_all_pairs_dot_sum(self):
        emb = two_axis_table()
        got = subject_mention_affinity(["north", "side"], ["star", "anti"], emb)
        # north.star=1 north.anti=-1 side.star=0 side.anti=0
        assert got == pytest.approx(0.0)

    def test_out_of_vocabulary_contributes_zero(self):
        emb = two_axis_table()
        assert subject_mention_affinity(["unknown"], ["north"], emb) == 0.0

    def test_prior_is_chain_plus_first_word_frequency(self):
        emb = two_axis_table(north=-0.5)
        got = mention_log_prior(["north", "star", "side"], emb)
        # log f(north) + star.north + side.star
        assert got == pytest.approx(-0.5 + 1.0 + 0.0)

    def test_prior_uses_floor_for_unseen_first_word(self):
        emb = two_axis_table()
        assert mention_log_prior(["star"], emb) == pytest.approx(-3.0)

    def test_prior_rejects_empty_mention(self):
        with pytest.raises(ValueError, match="non-empty"):
            mention_log_prior([], two_axis_table())

    def test_log_prob_is_affinity_plus_prior(self):
        emb = two_axis_table(star=-1.0)
        subject, mention = ["north"], ["star", "anti"]
        want = subject_mention_affinity(subject, mention, emb) + mention_log_prior(
            mention, emb
        )
        assert semantic_log_prob(subject, mention, emb) == pytest.approx(want)


class TestCombinedScore:
    def test_literal_only_at_tau_one(self):
        emb = two_axis_table()
        assert combined_score("north star", "north", emb, 1.0) == 5.0

    def test_semantic_only_at_tau_zero(self):
        emb = two_axis_table(north=-0.5)
        want = semantic_log_prob(["star"], ["north"], emb)
        assert combined_score("star", "north", emb, 0.0) == pytest.approx(want)

    def test_weighted_blend(self):
        emb = two_axis_table(north=-0.5)
        lit = lcs_length("star", "north")
        sem = semantic_log_prob(["star"], ["north"], emb)
        assert combined_score("star", "north", emb, 0.9) == pytest.approx(
            0.9 * lit + 0.1 * sem
        )

    @pytest.mark.parametrize("tau", [-0.1, 1.1])
    def test_rejects_out_of_range_tau(self, tau):
        with pytest.raises(ValueError, match="tau"):
            combined_score("a", "b", two_axis_table(), tau)


class TestRankerConfig:
    def test_defaults(self):
        cfg = RankerConfig()
        assert (cfg.tau, cfg.top_n, cfg.candidate_cap) == (0.9, 50, 200)

    @pytest.mark.parametrize(
        "kwargs, match",
        [
            ({"tau": 1.5}, "tau"),
            ({"tau": -0.5}, "tau"),
            ({"top_n": 0}, "top_n"),
            ({"top_n": 300}, "candidate_cap"),
        ],
    )
    def test_validation(self, kwargs, match):
        with pytest.raises(ValueError, match=match):
            RankerConfig(**kwargs)


def tagged(mention_tokens, pattern=("what", "is")):
    return TaggedQuestion(
        question=" ".join(pattern) + " " + " ".join(mention_tokens),
        mention_tokens=tuple(mention_tokens),
        pattern_tokens=tuple(pattern) + ("<m>",),
    )


def micro_graph(*subjects):
    kg = KnowledgeGraph([Fact(i, s, "rel", "obj") for i, s in enumerate(subjects)])
    return kg, build_index(kg, 1)


class TestRankSubgraph:
    def test_orders_by_descending_combined_score(self):
        kg, index = micro_graph("green h", "green hall", "green hal")
        cfg = RankerConfig(tau=1.0, top_n=10, candidate_cap=10)
        ranked = rank_subgraph(tagged(["green", "hall"]), kg, index, EmbeddingTable(1, {}), cfg)
        assert ranked.fact_ids() == [1, 2, 0]
        combined = [e.combined for e in ranked.entries]
        assert combined == sorted(combined, reverse=True)

    def test_ties_break_by_ascending_fact_id(self):
        kg, index = micro_graph("blade axe", "axe blade")
        cfg = RankerConfig(tau=1.0, top_n=10, candidate_cap=10)
        ranked = rank_subgraph(tagged(["axe"]), kg, index, EmbeddingTable(1, {}), cfg)
        assert ranked.entries[0].literal == ranked.entries[1].literal
        assert ranked.fact_ids() == [0, 1]

    def test_semantic_term_reorders_equal_literals(self):
        kg, index = micro_graph("north anti", "north star")
        emb = two_axis_table()
        cfg = RankerConfig(tau=0.0, top_n=10, candidate_cap=10)
        ranked = rank_subgraph(tagged(["north"]), kg, index, emb, cfg)
        assert ranked.fact_ids() == [1, 0]

    def test_truncates_to_top_n(self):
        kg, index = micro_graph(*(f"hall t{i}" for i in range(8)))
        cfg = RankerConfig(tau=1.0, top_n=3, candidate_cap=10)
        ranked = rank_subgraph(tagged(["hall"]), kg, index, EmbeddingTable(1, {}), cfg)
        assert len(ranked.entries) == 3

    def test_empty_retrieval_gives_empty_subgraph(self):
        kg, index = micro_graph("alpha")
        cfg = RankerConfig(top_n=5, candidate_cap=5)
        ranked = rank_subgraph(
            tagged(["zzz"]), kg, index, EmbeddingTable(1, {}), cfg, question_id=4
        )
        assert ranked.entries == ()
        assert ranked.question_id == 4

    def test_entry_scores_decompose(self):
        kg, index = micro_graph("north star")
        emb = two_axis_table(north=-0.5)
        cfg = RankerConfig(tau=0.9, top_n=5, candidate_cap=5)
        ranked = rank_subgraph(tagged(["north"]), kg, index, emb, cfg)
        entry = ranked.entries[0]
        assert entry.literal == lcs_length("north star", "north")
        assert entry.semantic == pytest.approx(
            semantic_log_prob(["north", "star"], ["north"], emb)
        )
        assert entry.combined == pytest.approx(
            0.9 * entry.literal + 0.1 * entry.semantic
        )


def ranked_list(question_id, fact_ids):
    entries = tuple(
        ScoredEntry(fid, 0.0, 0.0, float(-pos)) for pos, fid in enumerate(fact_ids)
    )
    return RankedSubgraph(question_id=question_id, entries=entries)


class TestTopnRecall:
    def test_counts_gold_subject_in_prefix(self):
        kg, _ = micro_graph("gold one", "other two", "gold one x")
        ranked = [ranked_list(0, [1, 0]), ranked_list(1, [1, 2])]
        golds = ["gold one", "gold one"]
        assert topn_recall(ranked, golds, 1, kg) == 0.0
        assert topn_recall(ranked, golds, 2, kg) == 0.5

    def test_non_decreasing_in_n(self):
        kg, _ = micro_graph("a x", "b x", "c x", "gold x")
        ranked = [ranked_list(0, [0, 1, 2, 3])]
        golds = ["gold x"]
        values = [topn_recall(ranked, golds, n, kg) for n in range(1, 5)]
        assert values == sorted(values)
        assert values[-1] == 1.0

    def test_length_mismatch_rejected(self):
        kg, _ = micro_graph("a")
        with pytest.raises(ValueError, match="gold subjects"):
            topn_recall([ranked_list(0, [0])], [], 1, kg)

    def test_empty_input(self):
        kg, _ = micro_graph("a")
        assert topn_recall([], [], 1, kg) == 0.0
