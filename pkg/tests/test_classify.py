import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import expit
from sklearn.base import clone

from driftclass.classify import (
    ClassifierModel, PluginDiffusionClassifier, class_proportions, excess_risk_mc,
    girsanov_functional, girsanov_functionals, predict, regression_score,
    write_predictions_csv,
)
from driftclass.drifts import ConstantDrift, ZeroDrift, make_bump_drift
from driftclass.simulate import MixtureModel, simulate_paths


def test_class_proportions():
    assert class_proportions([0, 1, 1, 0]) == (0.5, 0.5)
    assert class_proportions([1, 1, 1]) == (0.0, 1.0)
    y = np.random.default_rng(0).random(10_000) < 0.3
    p0, p1 = class_proportions(y.astype(int))
    assert 0.27 <= p1 <= 0.33
    with pytest.raises(ValueError):
        class_proportions([])


@given(st.lists(st.integers(0, 1), min_size=1, max_size=200))
def test_proportions_sum_to_one(labels):
    p0, p1 = class_proportions(labels)
    assert p0 + p1 == 1.0


def test_girsanov_zero_and_constant(bump_model):
    path = simulate_paths(bump_model, 1, 500, 1)[0]
    assert girsanov_functional(path, ZeroDrift()) == 0.0
    c = 0.7
    expected = c * (path.x[-1] - path.x[0]) - 0.5 * c * c * path.T
    assert girsanov_functional(path, ConstantDrift(c)) == pytest.approx(expected, abs=1e-12)


def test_girsanov_brute_force(bump_model):
    path = simulate_paths(bump_model, 1, 500, 2)[0]
    b = bump_model.b1
    ito = quad = 0.0
    for k in range(path.n_steps):
        v = float(b(path.x[k]))
        ito += v * (path.x[k + 1] - path.x[k])
        quad += v * v * path.dt
    assert girsanov_functional(path, b) == pytest.approx(ito - 0.5 * quad, abs=1e-12)


def test_score_equal_drifts(bump_model):
    b = bump_model.b1
    model = ClassifierModel(b, b, 0.3, 0.7)
    batch = simulate_paths(bump_model, 50, 100, 3)
    np.testing.assert_allclose(model.score_paths(batch), 0.7, rtol=0, atol=1e-15)


def test_score_half_half_special_case(bump_model):
    model = ClassifierModel.bayes(bump_model)
    batch = simulate_paths(bump_model, 40, 200, 4)
    F1 = girsanov_functionals(batch.x, bump_model.b1, 1.0)
    np.testing.assert_allclose(model.score_paths(batch), np.exp(F1) / (1 + np.exp(F1)), rtol=1e-12)


def test_score_saturation():
    # log-odds of 1000: no overflow, value within 1e-12 of 1
    model = ClassifierModel(ZeroDrift(), ConstantDrift(1.0), 0.5, 0.5)
    x = np.array([[0.0, 1000.5]])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        phi = float(model.score_paths(x, T=1.0)[0])
    assert model.log_odds(x, T=1.0)[0] == pytest.approx(1000.0)
    assert 1 - 1e-12 < phi <= 1.0


def test_tie_predicts_one(bump_model):
    b = bump_model.b1
    model = ClassifierModel(b, b, 0.5, 0.5)
    path = simulate_paths(bump_model, 1, 100, 5)[0]
    assert regression_score(model, path) == 0.5
    assert predict(model, path) == 1


@pytest.mark.parametrize("p1,label", [(0.9, 1), (0.1, 0)])
def test_constant_classifier_risk(bump_model, p1, label):
    b = bump_model.b1
    clf = ClassifierModel(b, b, 1 - p1, p1)
    data = MixtureModel(ZeroDrift(), b, p1, 0.0, 1.0)
    test = simulate_paths(data, 4000, 100, 6)
    pred = clf.predict_paths(test)
    assert np.all(pred == label)
    risk = np.mean(pred != test.labels)
    se = math.sqrt(0.1 * 0.9 / 4000)
    assert abs(risk - 0.1) <= 3 * se


def test_excess_identities(bump_model):
    bayes = ClassifierModel.bayes(bump_model)
    rep = excess_risk_mc(bayes, bayes, bump_model, 2000, 7, n_steps=200)
    assert rep.excess == 0.0
    assert rep.se == pytest.approx(math.sqrt(rep.risk * (1 - rep.risk) / 2000))

    class Flipped:
        def predict_paths(self, X, T=None):
            return 1 - bayes.predict_paths(X, T)

    rep = excess_risk_mc(Flipped(), bayes, bump_model, 2000, 7, n_steps=200)
    assert rep.excess == pytest.approx(1 - 2 * rep.bayes_risk, abs=1e-15)


def test_plugin_not_better_than_bayes(bump_model):
    train = simulate_paths(bump_model, 1024, 500, 8)
    clf = PluginDiffusionClassifier(m=0.05).fit(train)
    rep = excess_risk_mc(clf, ClassifierModel.bayes(bump_model), bump_model, 4000, 9)
    assert rep.excess >= -2 * rep.se


def test_bayes_optimal_across_fits(bump_model):
    bayes = ClassifierModel.bayes(bump_model)
    test = simulate_paths(bump_model, 2000, 200, 10)
    bayes_risk = np.mean(bayes.predict_paths(test) != test.labels)
    for r in range(50):
        train = simulate_paths(bump_model, 128, 200, [11, r])
        clf = PluginDiffusionClassifier(m=0.05).fit(train)
        risk = np.mean(clf.predict(test.x) != test.labels)
        se = math.sqrt(risk * (1 - risk) / test.labels.size)
        assert bayes_risk <= risk + 2 * se


@given(
    d=st.floats(-50, 50, allow_nan=False),
    shift=st.floats(-100, 100, allow_nan=False),
    p1=st.floats(0.05, 0.95),
)
def test_shift_invariance(d, shift, p1):
    base = math.log(p1 / (1 - p1))
    a = expit(base + (d + shift) - (0.0 + shift))
    b = expit(base + d)
    assert abs(a - b) <= 1e-12
    assert (a >= 0.5) == (b >= 0.5) or abs(base + d) < 1e-9


def test_shift_invariance_on_paths(bump_model):
    batch = simulate_paths(bump_model, 30, 200, 12)
    model = ClassifierModel.bayes(bump_model)
    F0 = girsanov_functionals(batch.x, model.b0, 1.0)
    F1 = girsanov_functionals(batch.x, model.b1, 1.0)
    for c in (-3.0, 0.5, 40.0):
        shifted = expit((F1 + c) - (F0 + c))
        np.testing.assert_allclose(shifted, model.score_paths(batch), rtol=0, atol=1e-12)


def test_score_monotone_in_log_odds():
    model = ClassifierModel(ZeroDrift(), ConstantDrift(1.0), 0.4, 0.6)
    ends = np.linspace(-5, 5, 101)
    x = np.column_stack([np.zeros_like(ends), ends])
    scores = model.score_paths(x, T=1.0)
    assert np.all(np.diff(scores) > 0)
    assert np.all((scores > 0) & (scores < 1))


def test_model_validation():
    with pytest.raises(ValueError):
        ClassifierModel(ZeroDrift(), ZeroDrift(), 0.5, 0.6)
    with pytest.raises(ValueError):
        ClassifierModel(ZeroDrift(), ZeroDrift(), 1.0, 0.0)
    with pytest.raises(ValueError):
        ClassifierModel(ZeroDrift(), ZeroDrift(), 0.5, 0.5, kind="other")
    with pytest.raises(ValueError):
        ClassifierModel(ZeroDrift(), ZeroDrift(), 0.5, 0.5).log_odds(np.zeros((2, 3)))


def test_prediction_deterministic(bump_model):
    model = ClassifierModel.bayes(bump_model)
    batch = simulate_paths(bump_model, 20, 100, 13)
    np.testing.assert_array_equal(model.predict_paths(batch), model.predict_paths(batch))


def test_plugin_estimator_api(bump_model):
    train = simulate_paths(bump_model, 300, 200, 14)
    clf = PluginDiffusionClassifier(beta=1.0, m=0.05, grid_size=101)
    assert clf.get_params()["grid_size"] == 101
    clf.fit(train.x, train.labels)
    np.testing.assert_array_equal(clf.classes_, [0, 1])
    proba = clf.predict_proba(train.x)
    assert proba.shape == (300, 2)
    np.testing.assert_allclose(proba.sum(axis=1), 1.0)
    np.testing.assert_array_equal(clf.predict(train.x), (proba[:, 1] >= 0.5).astype(int))
    assert clf.model_.kind == "plugin"
    assert clf.proportions_ == pytest.approx((np.mean(train.labels == 0), np.mean(train.labels == 1)))
    assert 0.0 <= clf.score(train.x, train.labels) <= 1.0
    assert not hasattr(clone(clf), "model_")


def test_plugin_per_class_support(bump_model):
    train = simulate_paths(bump_model, 200, 200, 15)
    clf = PluginDiffusionClassifier(support=((-2.0, 2.0), (-1.0, 1.0)), grid_size=41).fit(train)
    assert clf.drifts_[0].grid[0] == -2.0 and clf.drifts_[1].grid[0] == -1.0


def test_plugin_rejects_bad_input():
    with pytest.raises(ValueError):
        PluginDiffusionClassifier().fit(np.zeros((3, 5)), [0, 1, 2])
    with pytest.raises(ValueError):
        PluginDiffusionClassifier().fit(np.zeros((3, 5)), [0, 1])


def test_predictions_csv(tmp_path):
    out = tmp_path / "pred.csv"
    write_predictions_csv(out, [0, 1], [0.25, 0.75], [0, 1], [0, 0])
    assert out.read_text() == (
        "path_id,label,phi,predicted,bayes_predicted\n0,0,0.25,0,0\n1,1,0.75,1,0\n"
    )
