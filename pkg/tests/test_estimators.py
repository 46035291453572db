"""Estimator surface: parameter handling, fitted-state checks, end-to-end fit."""

import pytest
from sklearn.base import clone

from kbsqa import (
    ConfigError,
    JointScoringAnswerer,
    NotFittedError,
    Prediction,
    SubgraphRanker,
)
from kbsqa.tagging import oracle_tag
from kbsqa.validation import check_is_fitted


class TestCheckIsFitted:
    def test_passes_when_attributes_present(self):
        class Dummy:
            coef_ = 1

        check_is_fitted(Dummy(), "coef_")

    def test_raises_with_missing_attribute_names(self):
        class Dummy:
            pass

        with pytest.raises(NotFittedError, match="coef_"):
            check_is_fitted(Dummy(), "coef_")

    def test_not_fitted_error_is_attribute_error(self):
        # mirrors the sklearn convention so hasattr-style probes keep working
        assert issubclass(NotFittedError, AttributeError)


class TestSubgraphRanker:
    def test_get_params_round_trip(self):
        ranker = SubgraphRanker(tau=0.7, top_n=5, candidate_cap=20, max_ngram=2)
        params = ranker.get_params()
        assert params == {
            "tau": 0.7, "top_n": 5, "candidate_cap": 20, "max_ngram": 2,
        }
        other = SubgraphRanker().set_params(**params)
        assert other.get_params() == params

    def test_clone_preserves_parameters(self):
        ranker = SubgraphRanker(tau=0.4)
        assert clone(ranker).tau == 0.4

    def test_unfitted_rank_raises(self, toy_questions):
        q = toy_questions[0]
        tq = oracle_tag(q.text, q.subject)
        with pytest.raises(NotFittedError, match="fit"):
            SubgraphRanker().rank(tq)

    def test_unfitted_transform_raises(self):
        with pytest.raises(NotFittedError):
            SubgraphRanker().transform([])

    def test_fit_validates_ngram_order(self, toy_kg):
        with pytest.raises(ValueError, match="max_ngram"):
            SubgraphRanker(max_ngram=0).fit(toy_kg)

    def test_fit_validates_config(self, toy_kg):
        with pytest.raises(ValueError, match="tau"):
            SubgraphRanker(tau=2.0).fit(toy_kg)

    def test_transform_ranks_every_question(
        self, toy_kg, toy_questions, toy_embeddings
    ):
        ranker = SubgraphRanker(top_n=10).fit(toy_kg, toy_embeddings)
        tagged = [oracle_tag(q.text, q.subject) for q in toy_questions[:4]]
        ranked = ranker.transform(tagged)
        assert [rs.question_id for rs in ranked] == [0, 1, 2, 3]
        assert all(rs.entries for rs in ranked)

    def test_fit_without_embeddings_scores_literal_only_signal(self, toy_kg, toy_questions):
        # an empty embedding table zeroes the semantic term, literal remains
        ranker = SubgraphRanker(top_n=5).fit(toy_kg)
        q = toy_questions[0]
        ranked = ranker.rank(oracle_tag(q.text, q.subject))
        assert toy_kg.facts[ranked.entries[0].fact_id].subject == q.subject


class TestJointScoringAnswerer:
    def fitted(self, toy_questions, toy_kg, toy_embeddings):
        answerer = JointScoringAnswerer(
            preset="desk", epochs=2, batch_size=8, negatives_per_question=2,
            top_n=10, seed=0,
        )
        return answerer.fit(toy_questions[:6], toy_kg, toy_embeddings)

    def test_get_params_includes_every_knob(self):
        params = JointScoringAnswerer().get_params()
        assert params["preset"] == "desk"
        assert params["loss_kind"] == "well_order"
        assert "negatives_per_question" in params
        assert "tau" in params

    def test_clone_preserves_parameters(self):
        answerer = JointScoringAnswerer(epochs=7, margin=0.3)
        cloned = clone(answerer)
        assert (cloned.epochs, cloned.margin) == (7, 0.3)

    def test_unfitted_predict_raises(self, toy_questions):
        with pytest.raises(NotFittedError):
            JointScoringAnswerer().predict(toy_questions[:1])

    def test_bad_preset_rejected_at_fit(self, toy_questions, toy_kg):
        with pytest.raises(ConfigError, match="preset"):
            JointScoringAnswerer(preset="huge").fit(toy_questions[:2], toy_kg)

    def test_fit_predict_score(self, toy_questions, toy_kg, toy_embeddings):
        answerer = self.fitted(toy_questions, toy_kg, toy_embeddings)
        questions = toy_questions[:6]
        predictions = answerer.predict(questions)
        assert len(predictions) == 6
        assert all(isinstance(p, Prediction) for p in predictions)
        assert [p.question_id for p in predictions] == [q.question_id for q in questions]
        accuracy = answerer.score(questions)
        assert 0.0 <= accuracy <= 1.0

    def test_evaluate_on_reports_recalls(self, toy_questions, toy_kg, toy_embeddings):
        answerer = self.fitted(toy_questions, toy_kg, toy_embeddings)
        report = answerer.evaluate_on(toy_questions[:6], recall_ns=(1, 5))
        assert set(report.topn_recalls) == {1, 5}
        assert report.total_questions == 6

    def test_fit_exposes_training_artifacts(self, toy_questions, toy_kg, toy_embeddings):
        answerer = self.fitted(toy_questions, toy_kg, toy_embeddings)
        assert len(answerer.loss_curve_) == 2
        assert answerer.skipped_question_ids_ == ()
        assert answerer.char_matcher_.config.mode == "char"
        assert answerer.word_matcher_.config.mode == "word"
