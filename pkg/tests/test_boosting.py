"""Depth-capped trees and binary AdaBoost, full and unimodal-restricted."""

import numpy as np
import pytest

from emap.boosting import (
    AdaBoostConfig,
    AdaBoostModel,
    DecisionTree,
    _fit_binary_complete,
    fit_tree,
    full_boost_round,
    init_boost_state,
    train_adaboost,
    unimodal_restricted_boost_round,
)
from emap.data import PairedDataset
from emap.exceptions import InputError


def cells_of(table: np.ndarray):
    """All (t-bits, v-bits, label) cells of an n-bit-per-side truth table."""
    size = table.shape[0]
    n = int(np.log2(size))
    patterns = ((np.arange(size)[:, None] >> np.arange(n)) & 1).astype(np.float64)
    rows = np.repeat(np.arange(size), size)
    cols = np.tile(np.arange(size), size)
    return patterns[rows], patterns[cols], table.ravel().astype(np.int64)


class TestTree:
    def test_memorizes_any_truth_table(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            table = rng.integers(0, 2, size=(8, 8))
            if len(np.unique(table)) < 2:
                continue
            X_t, X_v, y = cells_of(table)
            X = np.hstack([X_t, X_v])
            tree = fit_tree(X, y, np.full(64, 1 / 64), max_depth=15)
            np.testing.assert_array_equal(tree.predict(X), np.where(y == 1, 1.0, -1.0))

    def test_splits_xor_despite_zero_gain(self):
        """Any single split of XOR has zero impurity gain; the fit must still descend."""
        X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
        y = np.array([0, 1, 1, 0])
        tree = fit_tree(X, y, np.full(4, 0.25), max_depth=15)
        np.testing.assert_array_equal(tree.predict(X), [-1.0, 1.0, 1.0, -1.0])

    def test_deterministic(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((60, 4))
        y = (X[:, 0] > 0).astype(np.int64)
        w = rng.uniform(0.5, 1.5, 60)
        a = fit_tree(X, y, w, 5)
        b = fit_tree(X, y, w, 5)
        assert a.feature.tobytes() == b.feature.tobytes()
        assert a.threshold.tobytes() == b.threshold.tobytes()

    def test_depth_zero_is_majority_vote(self):
        X = np.zeros((5, 2))
        y = np.array([1, 1, 1, 0, 0])
        tree = fit_tree(X, y, np.ones(5), max_depth=0)
        np.testing.assert_array_equal(tree.predict(X), 1.0)

    def test_complete_tree_fast_path_matches_greedy(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            n_feat = int(rng.integers(1, 5))
            m = int(rng.integers(2, 40))
            X = rng.integers(0, 2, size=(m, n_feat)).astype(np.float64)
            y = rng.integers(0, 2, size=m)
            if len(np.unique(y)) < 2:
                continue
            w = rng.uniform(0.1, 1.0, size=m)
            greedy = fit_tree(X, y, w, 15)
            fast_tree, fast_h = _fit_binary_complete(X, y, w)
            np.testing.assert_array_equal(greedy.predict(X), fast_h)
            np.testing.assert_array_equal(fast_tree.predict(X), fast_h)

    def test_roundtrip(self):
        X = np.random.default_rng(3).standard_normal((30, 3))
        y = (X[:, 1] > 0).astype(np.int64)
        tree = fit_tree(X, y, np.ones(30), 4)
        clone = DecisionTree.from_json_dict(tree.to_json_dict())
        np.testing.assert_array_equal(clone.predict(X), tree.predict(X))


class TestBoostRounds:
    def test_constant_labels_rejected_at_entry(self):
        with pytest.raises(InputError):
            init_boost_state(np.zeros((4, 1)), np.zeros((4, 1)), np.ones(4, dtype=int))

    def test_text_only_signal_selects_text_side(self):
        """When labels depend only on t, the better weak learner is always text-side."""
        rng = np.random.default_rng(4)
        X_t = rng.integers(0, 2, size=(64, 3)).astype(np.float64)
        X_v = rng.integers(0, 2, size=(64, 3)).astype(np.float64)
        y = X_t[:, 0].astype(np.int64)
        state = init_boost_state(X_t, X_v, y, max_depth=15)
        for _ in range(10):
            unimodal_restricted_boost_round(state)
            if state.stop_reason:
                break
        assert state.stages
        assert all(side == "text" for _, _, side in state.stages)

    def test_xor_table_stalls_unimodal_boosting(self):
        X_t, X_v, y = cells_of(np.array([[0, 1], [1, 0]]))
        state = init_boost_state(X_t, X_v, y, max_depth=15)
        unimodal_restricted_boost_round(state)
        assert state.stop_reason == "no_weak_learner"
        assert not state.stages

    def test_full_round_fits_xor_immediately(self):
        X_t, X_v, y = cells_of(np.array([[0, 1], [1, 0]]))
        state = init_boost_state(X_t, X_v, y, max_depth=15)
        full_boost_round(state)
        assert state.stop_reason == "perfect_fit"
        np.testing.assert_array_equal(np.sign(state.scores), state.y_sign)


class TestTrainAdaboost:
    def make_dataset(self, table):
        X_t, X_v, y = cells_of(table)
        return PairedDataset(
            text=X_t,
            visual=X_v,
            labels=y,
            split=np.zeros(len(y), dtype=np.int8),
            num_classes=2,
        )

    def test_full_fit_is_perfect_on_random_tables(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            table = rng.integers(0, 2, size=(8, 8))
            if len(np.unique(table)) < 2:
                continue
            ds = self.make_dataset(table)
            model = train_adaboost(ds, AdaBoostConfig(restriction="full"))
            assert model.stop_reason == "perfect_fit"
            scores = model.decision_scores(ds.text, ds.visual)
            np.testing.assert_array_equal(np.sign(scores), np.where(ds.labels == 1, 1.0, -1.0))

    def test_multiclass_rejected(self):
        ds = PairedDataset(
            text=np.zeros((3, 1)),
            visual=np.zeros((3, 1)),
            labels=np.array([0, 1, 2]),
            split=np.zeros(3, dtype=np.int8),
            num_classes=3,
        )
        with pytest.raises(InputError):
            train_adaboost(ds)

    def test_per_class_logits_match_decision_scores(self):
        rng = np.random.default_rng(6)
        table = rng.integers(0, 2, size=(4, 4))
        ds = self.make_dataset(table)
        model = train_adaboost(ds, AdaBoostConfig(restriction="unimodal", n_stages=20))
        logits = model.logits_many(ds.text, ds.visual)
        scores = model.decision_scores(ds.text, ds.visual)
        np.testing.assert_allclose(logits[:, 1] - logits[:, 0], scores, atol=1e-12)

    def test_serialization_roundtrip(self):
        rng = np.random.default_rng(7)
        table = rng.integers(0, 2, size=(4, 4))
        ds = self.make_dataset(table)
        model = train_adaboost(ds, AdaBoostConfig(restriction="unimodal", n_stages=15))
        clone = AdaBoostModel.from_json_dict(model.to_json_dict())
        np.testing.assert_array_equal(
            clone.decision_scores(ds.text, ds.visual),
            model.decision_scores(ds.text, ds.visual),
        )
        assert clone.restriction == model.restriction
