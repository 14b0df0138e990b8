import numpy as np
import pytest

from instrumentid.baselines import (
    LogisticModel, ForestConfig,
    logistic_train, logistic_predict,
    forest_train, forest_predict,
    majority_baseline,
)


def _binary(labels_1d):
    return np.asarray(labels_1d).reshape(-1, 1)


class TestLogistic:
    def test_zero_weights_predict_half(self):
        model = LogisticModel(np.zeros(2), np.ones(2), np.ones(2, dtype=bool),
                              np.zeros((3, 4)))
        probs = logistic_predict(model, np.random.default_rng(0).normal(size=(5, 2)))
        np.testing.assert_array_equal(probs, 0.5)

    def test_separable_toy_reaches_full_accuracy(self):
        rng = np.random.default_rng(1)
        n = 60
        x = rng.normal(size=(n, 2))
        y = _binary((x[:, 0] + x[:, 1] > 0).astype(int))
        model = logistic_train(x, y, learning_rate=1.0, epochs=500, seed=0)
        pred = (logistic_predict(model, x) >= 0.5).astype(int)
        assert (pred == y).mean() == 1.0

    def test_constant_dimension_dropped(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(40, 3))
        x[:, 1] = 7.0  # constant -> zero variance -> dropped
        y = _binary((x[:, 0] > 0).astype(int))
        model = logistic_train(x, y, epochs=50)
        assert model.kept.tolist() == [True, False, True]
        assert model.weights.shape == (3, 1)  # 2 kept dims + bias
        probs = logistic_predict(model, x)
        assert probs.shape == (40, 1)

    def test_multilabel_training_is_per_label(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(80, 2))
        y = np.stack([(x[:, 0] > 0).astype(int), (x[:, 1] > 0).astype(int)], axis=1)
        model = logistic_train(x, y, learning_rate=1.0, epochs=400, seed=0)
        pred = (logistic_predict(model, x) >= 0.5).astype(int)
        assert (pred == y).mean() > 0.97

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(30, 3))
        y = _binary(rng.integers(0, 2, size=30))
        w1 = logistic_train(x, y, epochs=20, seed=9).weights
        w2 = logistic_train(x, y, epochs=20, seed=9).weights
        np.testing.assert_array_equal(w1, w2)

    def test_rejects_non_binary_labels(self):
        with pytest.raises(ValueError, match="binary"):
            logistic_train(np.zeros((4, 2)), np.full((4, 1), 0.5))


class TestForest:
    def test_single_stump_reproduces_threshold_rule(self):
        x = np.array([[0.0], [1.0], [2.0], [3.0], [10.0], [11.0], [12.0], [13.0]])
        y = _binary([0, 0, 0, 0, 1, 1, 1, 1])
        cfg = ForestConfig(trees=1, max_depth=1, features_per_split=1, seed=0)
        model = forest_train(x, y, cfg)
        test = np.array([[4.0], [8.0]])
        scores = forest_predict(model, test)
        assert scores[0, 0] == 0.0 and scores[1, 0] == 1.0

    def test_pure_labels_predict_that_label(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(20, 3))
        y = np.ones((20, 1), dtype=int)
        model = forest_train(x, y, ForestConfig(trees=5, seed=1))
        assert (forest_predict(model, x) == 1.0).all()

    def test_xor_pattern_learned(self):
        rng = np.random.default_rng(6)
        n = 200
        x = rng.uniform(-1, 1, size=(n, 2))
        y = _binary(((x[:, 0] > 0) ^ (x[:, 1] > 0)).astype(int))
        model = forest_train(x, y, ForestConfig(trees=100, seed=2))
        pred = (forest_predict(model, x) >= 0.5).astype(int)
        assert (pred == y).mean() > 0.95

    def test_monotone_feature_transform_invariant(self):
        # split rules depend only on feature order, so a rank-preserving
        # transform applied at train and predict time changes nothing;
        # exact only for in-sample points, hence bootstrap off
        rng = np.random.default_rng(7)
        x = rng.uniform(0.1, 4.0, size=(60, 3))
        y = _binary((x[:, 0] * 2 + x[:, 2] > 5).astype(int))
        cfg = ForestConfig(trees=20, seed=3, bootstrap=False)
        raw_scores = forest_predict(forest_train(x, y, cfg), x)

        warped = x.copy()
        warped[:, 0] = np.log(warped[:, 0])
        scores = forest_predict(forest_train(warped, y, cfg), warped)
        np.testing.assert_array_equal(raw_scores, scores)

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(8)
        x = rng.normal(size=(40, 4))
        y = _binary(rng.integers(0, 2, size=40))
        cfg = ForestConfig(trees=10, seed=7)
        s1 = forest_predict(forest_train(x, y, cfg), x)
        s2 = forest_predict(forest_train(x, y, cfg), x)
        np.testing.assert_array_equal(s1, s2)


class TestMajority:
    def test_top_three_by_count(self):
        labels = np.zeros((20, 11), dtype=int)
        labels[:10, 0] = 1
        labels[:9, 1] = 1
        labels[:8, 2] = 1
        labels[:1, 3] = 1
        pred = majority_baseline(labels)
        assert pred.tolist() == [1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0]

    def test_tie_for_third_goes_to_lower_index(self):
        labels = np.zeros((10, 11), dtype=int)
        labels[:5, 0] = 1
        labels[:4, 1] = 1
        labels[:3, 5] = 1  # tie between labels 5 and 7
        labels[:3, 7] = 1
        pred = majority_baseline(labels)
        assert pred.tolist() == [1, 1, 0, 0, 0, 1, 0, 0, 0, 0, 0]

    def test_perfect_on_three_always_on_labels(self):
        # test set where labels 0-2 are always on and the rest always off:
        # the fixed majority vector scores hamming accuracy 1.0
        from instrumentid.metrics import evaluate
        train = np.zeros((30, 11), dtype=int)
        train[:, :3] = 1
        test = np.zeros((12, 11), dtype=int)
        test[:, :3] = 1
        pred = np.tile(majority_baseline(train), (12, 1))
        assert evaluate(pred, test).hamming_accuracy == 1.0

    def test_hamming_accuracy_matches_analytic_expectation(self):
        # test labels engineered with known frequencies, fixed predictor
        rng = np.random.default_rng(9)
        train = np.zeros((50, 11), dtype=int)
        train[:, :3] = 1  # majority = labels 0, 1, 2
        pred_vec = majority_baseline(train)
        freq = np.array([0.9, 0.8, 0.1, 0.5] + [0.0] * 7)
        n = 2000
        test = (rng.uniform(size=(n, 11)) < freq).astype(int)
        pred = np.tile(pred_vec, (n, 1))
        acc = (pred == test).mean()
        expected = np.where(pred_vec == 1, freq, 1 - freq).mean()
        assert acc == pytest.approx(expected, abs=0.02)
