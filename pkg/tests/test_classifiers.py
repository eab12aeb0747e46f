from __future__ import annotations

import math

import numpy as np
import pytest

from defectval.classifiers import (
    KINDS,
    ClassifierSpec,
    MinMaxScaler,
    default_roster,
    score,
    score_many,
    spec_from_json,
    train,
)
from defectval.classifiers.intervals import VFI, HyperPipes, interval_index
from defectval.classifiers.lazy import IBk
from defectval.classifiers.linear import VotedPerceptron
from defectval.classifiers.trees import C45Tree, RandomTree, added_errors
from defectval.errors import InvalidParameter, WidthMismatch
from defectval.matrix import LabeledMatrix
from defectval.metrics import auc


def matrix(X, y) -> LabeledMatrix:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=bool)
    return LabeledMatrix(X, y, np.ones(y.size, dtype=np.int64), tuple(str(i) for i in range(y.size)))


def signal_data(n=300, seed=0, width=6):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, width))
    y = X[:, 0] + 0.5 * X[:, 1] + 0.5 * rng.normal(size=n) > 0.6
    return X, y


def test_roster_is_nine_sorted_kinds():
    names = [s.name for s in default_roster()]
    assert names == sorted(KINDS) and len(names) == 9


@pytest.mark.parametrize("spec", default_roster(), ids=lambda s: s.name)
def test_every_classifier_learns_signal(spec):
    X, y = signal_data()
    Xt, yt = signal_data(seed=1)
    model = train(spec, matrix(X, y), seed=3)
    scores = score_many(model, Xt)
    assert scores.shape == (yt.size,)
    assert ((scores >= 0) & (scores <= 1)).all()
    assert auc(scores, yt) > 0.6


@pytest.mark.parametrize("spec", default_roster(), ids=lambda s: s.name)
def test_training_is_deterministic(spec):
    X, y = signal_data(120)
    a = score_many(train(spec, matrix(X, y), seed=9), X)
    b = score_many(train(spec, matrix(X, y), seed=9), X)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("flag, expected", [(True, 1.0), (False, 0.0)])
def test_single_class_training_gives_constant(flag, expected):
    X, _ = signal_data(20)
    model = train(ClassifierSpec("J48"), matrix(X, [flag] * 20), seed=0)
    assert model.constant == expected
    assert score(model, X[0]) == expected


def test_width_mismatch():
    X, y = signal_data(50)
    model = train(ClassifierSpec("NaiveBayes"), matrix(X, y), seed=0)
    with pytest.raises(WidthMismatch):
        score_many(model, X[:, :3])
    with pytest.raises(WidthMismatch):
        score(model, X[:2])


def test_parameter_validation():
    assert ClassifierSpec("IBk").parameters == {"k": 3}
    assert ClassifierSpec("IBk", {"k": 5}, "IB5").name == "IB5"
    for kind, params in [("IBk", {"k": 0}), ("IB1", {"k": 3}), ("J48", {"confidence": 0.7}),
                         ("RandomForest", {"trees": 0}), ("Logistic", {"alpha": 1}), ("SVM", {})]:
        with pytest.raises(InvalidParameter):
            ClassifierSpec(kind, params)


def test_spec_json_round_trip():
    spec = ClassifierSpec("RandomForest", {"trees": 7})
    assert spec_from_json(spec.to_json()) == spec
    with pytest.raises(InvalidParameter):
        spec_from_json({"kind": "J48", "extra": 1})


def test_min_max_scaler_clamps_to_unit_interval():
    scaler = MinMaxScaler.fit(np.array([[0.0, 5.0], [10.0, 5.0]]))
    out = scaler.transform(np.array([[5.0, 5.0], [20.0, 1.0], [-3.0, 9.0]]))
    assert out.tolist() == [[0.5, 0.0], [1.0, 0.0], [0.0, 0.0]]


def test_added_errors_matches_c45_values():
    # zero-error leaf: n * (1 - CF^(1/n))
    assert math.isclose(added_errors(6, 0, 0.25), 6 * (1 - 0.25 ** (1 / 6)))
    # e >= 1 uses the upper normal-approximation bound; e + 0.5 >= n caps at n - e
    assert added_errors(2, 2, 0.25) == 0.0
    assert added_errors(10, 3, 0.25) > 0
    assert added_errors(0, 0, 0.25) == 0.0


def test_j48_splits_threshold_at_midpoint():
    X = np.array([[1.0], [2.0], [3.0], [4.0], [5.0], [6.0], [7.0], [8.0]])
    y = np.array([0, 0, 0, 0, 1, 1, 1, 1], dtype=bool)
    tree = C45Tree(min_leaf=2).fit(X, y).tree
    assert tree.feature[0] == 0 and tree.threshold[0] == 4.5
    # Laplace leaves: (0+1)/(4+2) and (4+1)/(4+2)
    assert tree.predict(np.array([[0.0], [9.0]])).tolist() == [1 / 6, 5 / 6]


def test_j48_prunes_noise_split():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(60, 3))
    y = rng.random(60) < 0.1
    pruned = C45Tree(pruned=True).fit(X, y).tree
    unpruned = C45Tree(pruned=False).fit(X, y).tree
    assert pruned.n_leaves <= unpruned.n_leaves


def test_random_tree_grows_until_pure():
    X, y = signal_data(80, width=3)
    tree = RandomTree(features_per_split=1).fit(X, y, np.random.default_rng(0)).tree
    values = tree.predict(X)
    # distinct feature vectors are all separated, so the tree fits the training data exactly
    assert np.array_equal(values, y.astype(float))


def test_ibk_matches_brute_force():
    rng = np.random.default_rng(4)
    X = rng.random((40, 3))
    y = rng.random(40) < 0.5
    Q = rng.random((15, 3))
    got = IBk(3).fit(X, y).predict_proba(Q)
    for q, g in zip(Q, got):
        d = ((X - q) ** 2).sum(axis=1)
        nearest = sorted(range(40), key=lambda i: (d[i], i))[:3]
        assert g == y[nearest].mean()


def test_ib1_ties_resolve_to_first_training_row():
    X = np.array([[0.0], [2.0], [0.0]])
    y = np.array([True, False, False])
    assert IBk(1).fit(X, y).predict_proba(np.array([[0.0], [1.0]])).tolist() == [1.0, 1.0]


def test_naive_bayes_matches_hand_computation():
    X = np.array([[0.0], [2.0], [4.0], [6.0]])
    y = np.array([False, False, True, True])
    model = train(ClassifierSpec("NaiveBayes"), matrix(X, y), seed=0)

    def density(x, mean, var):
        return math.exp(-(x - mean) ** 2 / (2 * var)) / math.sqrt(2 * math.pi * var)

    x = 3.5
    clean = 0.5 * density(x, 1.0, 1.0)
    defective = 0.5 * density(x, 5.0, 1.0)
    assert math.isclose(score(model, [x]), defective / (clean + defective), rel_tol=1e-12)


def test_naive_bayes_ignores_constant_features():
    X = np.array([[0.0, 7.0], [1.0, 7.0], [5.0, 7.0], [6.0, 7.0]])
    y = np.array([False, False, True, True])
    model = train(ClassifierSpec("NaiveBayes"), matrix(X, y), seed=0)
    assert score(model, [5.5, 7.0]) == score(model, [5.5, -100.0])


def test_logistic_recovers_direction():
    X, y = signal_data(500)
    model = train(ClassifierSpec("Logistic"), matrix(X, y), seed=0)
    beta = model.estimator.beta
    assert beta[1] > 0 and beta[2] > 0 and beta[1] > abs(beta[3])


def test_logistic_survives_separable_data():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([False, False, True, True])
    model = train(ClassifierSpec("Logistic"), matrix(X, y), seed=0)
    assert score(model, [0.0]) < 0.01 and score(model, [3.0]) > 0.99


def test_hyperpipes_containment():
    X = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 5.0], [3.0, 6.0]])
    y = np.array([False, False, True, True])
    hp = HyperPipes().fit(X, y)
    assert hp.containment(np.array([[0.5, 5.5]])).tolist() == [[0.5, 0.5]]
    assert hp.predict_proba(np.array([[2.5, 5.5], [0.5, 0.5], [10.0, 10.0]])).tolist() == [1.0, 0.0, 0.5]


def test_interval_index():
    ends = np.array([1.0, 3.0])
    got = interval_index(ends, np.array([0.0, 1.0, 2.0, 3.0, 4.0]))
    assert got.tolist() == [0, 1, 2, 3, 4]


def test_vfi_votes_by_class_share():
    # class endpoints 0, 2 and 3, 5; the open ranges (0, 2) and (3, 5) each hold one training row
    X = np.array([[0.0], [1.0], [2.0], [3.0], [4.0], [5.0]])
    y = np.array([False, False, False, True, True, True])
    model = VFI().fit(X, y)
    got = model.predict_proba(np.array([[0.5], [4.5], [-5.0], [2.5]]))
    assert got.tolist() == [0.0, 1.0, 0.5, 0.5]


def test_voted_perceptron_separates_linear_data():
    X = np.array([[0.0, 0.0], [0.1, 0.2], [0.9, 0.8], [1.0, 1.0]])
    y = np.array([False, False, True, True])
    model = VotedPerceptron(epochs=20).fit(X, y)
    scores = model.predict_proba(X)
    assert scores[2] > 0.5 and scores[3] > 0.5 and scores[0] < 0.5 and scores[1] < 0.5
    assert model.counts.sum() == 20 * 4
