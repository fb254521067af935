import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from speechdisturb.classify import (
    FEATURE_NAMES,
    Classifier,
    FeatureError,
    FeatureVector,
    build_feature_vectors,
    cross_validate,
    stratified_folds,
    train_eval,
)
from speechdisturb.corpus import Group, Participant, TranscriptCorpus
from speechdisturb.derailment import WordFilter
from speechdisturb.modifiers import ModifierScores

from helpers import separable_vectors


def test_feature_names_order():
    assert FEATURE_NAMES == (
        "adj_similarity", "adv_similarity",
        "derail_all_k1", "derail_all_k2", "derail_all_k3", "derail_all_k4", "derail_all_k5",
        "derail_content_k1", "derail_content_k2", "derail_content_k3", "derail_content_k4", "derail_content_k5",
    )


def _inputs(adv_values):
    ids = [f"p{i}" for i in range(len(adv_values))]
    corpus = TranscriptCorpus(tuple(Participant(pid, Group.CONTROL if i % 2 else Group.PATIENT) for i, pid in enumerate(ids)))
    derail = {
        (k, f): {pid: 0.1 * k + (0.5 if f is WordFilter.CONTENT else 0.0) for pid in ids}
        for k in range(1, 6) for f in WordFilter
    }
    mods = {pid: ModifierScores(pid, 0.5, adv) for pid, adv in zip(ids, adv_values)}
    return corpus, derail, mods


def test_complete_vectors():
    vecs = build_feature_vectors(*_inputs([0.9, 0.8]))
    assert all(not any(v.imputed_mask) for v in vecs)
    assert vecs[0].features[:3] == (0.5, 0.9, 0.1)
    assert vecs[0].features[7] == pytest.approx(0.6)
    assert len(vecs[0].features) == 12


def test_mean_imputation():
    vecs = build_feature_vectors(*_inputs([0.6, None, 0.8]))
    assert vecs[1].features[1] == pytest.approx(0.7)
    assert vecs[1].imputed_mask[1] and sum(vecs[1].imputed_mask) == 1
    assert not vecs[0].imputed_mask[1]


def test_feature_undefined_everywhere():
    with pytest.raises(FeatureError, match="adv_similarity"):
        build_feature_vectors(*_inputs([None, None]))


def test_missing_derailment_key():
    corpus, derail, mods = _inputs([0.1, 0.2])
    del derail[(3, WordFilter.ALL)]
    with pytest.raises(FeatureError):
        build_feature_vectors(corpus, derail, mods)


def test_balanced_folds():
    labels = [0] * 5 + [1] * 5
    for train, test in stratified_folds(labels, 5, seed=3):
        assert sorted(labels[i] for i in test) == [0, 1]
        assert len(train) == 8


def test_leave_one_out():
    folds = stratified_folds([0, 1, 0, 1, 1], 5, seed=0)
    assert sorted(int(t[0]) for _, t in folds) == [0, 1, 2, 3, 4]
    assert all(len(t) == 1 for _, t in folds)


def test_folds_deterministic_and_seeded():
    labels = [0] * 13 + [1] * 11
    a = stratified_folds(labels, 4, seed=9)
    b = stratified_folds(labels, 4, seed=9)
    assert all(np.array_equal(x[1], y[1]) for x, y in zip(a, b))
    c = stratified_folds(labels, 4, seed=10)
    assert any(not np.array_equal(x[1], y[1]) for x, y in zip(a, c))


def test_fold_errors():
    with pytest.raises(ValueError):
        stratified_folds([0, 1], 3, 0)
    with pytest.raises(ValueError):
        stratified_folds([0, 1, 1], 1, 0)


@settings(max_examples=60)
@given(st.lists(st.integers(0, 2), min_size=2, max_size=60), st.integers(2, 12), st.integers(0, 2**31))
def test_fold_partition_and_proportions(labels, k, seed):
    if k > len(labels):
        with pytest.raises(ValueError):
            stratified_folds(labels, k, seed)
        return
    folds = stratified_folds(labels, k, seed)
    assert len(folds) == k
    tests = np.concatenate([t for _, t in folds])
    assert sorted(tests.tolist()) == list(range(len(labels)))
    for train, test in folds:
        assert set(train).isdisjoint(test) and len(train) + len(test) == len(labels)
        for cls in set(labels):
            share = labels.count(cls) / k
            got = sum(labels[i] == cls for i in test)
            assert share - 1 < got < share + 1


@pytest.mark.parametrize("kind", list(Classifier))
def test_separable_data(kind):
    report = train_eval(kind, separable_vectors(50, seed=0), k_folds=10, seed=0)
    assert report.accuracy >= 0.9
    assert len(report.per_fold) == 10
    for m in (report.accuracy, report.precision, report.recall):
        assert 0.0 <= m <= 1.0


@pytest.mark.parametrize("kind", list(Classifier))
def test_noise_is_at_chance(kind):
    rng = np.random.default_rng(5)
    labels = [Group.CONTROL] * 25 + [Group.PATIENT] * 25
    rng.shuffle(labels)
    vecs = [FeatureVector(f"s{i}", g, tuple(rng.standard_normal(12)), (False,) * 12) for i, g in enumerate(labels)]
    assert 0.3 <= train_eval(kind, vecs, 10, seed=0).accuracy <= 0.7


def test_single_class_rejected():
    vecs = [v for v in separable_vectors(20) if v.label is Group.CONTROL]
    with pytest.raises(ValueError, match="one class"):
        train_eval(Classifier.RANDOM_FOREST, vecs, 5, 0)


@pytest.mark.parametrize("kind", [Classifier.RANDOM_FOREST, Classifier.GRADIENT_BOOSTING])
def test_importances_normalised(kind):
    report = train_eval(kind, separable_vectors(40, seed=2), 5, seed=1)
    values = np.array([v for _, v in report.importances])
    assert np.all(values >= 0) and values.sum() == pytest.approx(1.0)
    assert train_eval(Classifier.LINEAR_SVM, separable_vectors(40), 5, 0).importances is None


def test_report_deterministic():
    vecs = separable_vectors(30, seed=4)
    for kind in Classifier:
        assert train_eval(kind, vecs, 5, seed=11).to_dict() == train_eval(kind, vecs, 5, seed=11).to_dict()


def _permuted_runs(kind, hp=None):
    vecs = separable_vectors(40, seed=6, separation=1.5)
    X = np.array([v.features for v in vecs])
    y = np.array([v.label is Group.PATIENT for v in vecs])
    perm = np.random.default_rng(0).permutation(12)
    return perm, cross_validate(kind, X, y, 5, 3, hp), cross_validate(kind, X[:, perm], y, 5, 3, hp)


def test_feature_permutation_linear():
    _, (base, pred), (permuted, pred_p) = _permuted_runs(Classifier.LINEAR_SVM)
    assert permuted.accuracy == base.accuracy
    np.testing.assert_array_equal(pred, pred_p)


# sklearn trees visit features in a random order and break equal-gain ties by
# that order, so permuting columns can flip a few tie-decided predictions.
@pytest.mark.parametrize(
    "kind, hp", [(Classifier.RANDOM_FOREST, {"max_features": None}), (Classifier.GRADIENT_BOOSTING, None)]
)
def test_feature_permutation_trees(kind, hp):
    perm, (base, pred), (permuted, pred_p) = _permuted_runs(kind, hp)
    assert abs(permuted.accuracy - base.accuracy) <= 0.05
    assert np.mean(pred != pred_p) <= 0.1
    imp = np.array([v for _, v in base.importances])
    imp_p = np.array([v for _, v in permuted.importances])
    # the signal columns stay on top wherever they move
    assert set(np.argsort(imp_p)[-2:]) == {int(np.flatnonzero(perm == 0)[0]), int(np.flatnonzero(perm == 1)[0])}
    assert set(np.argsort(imp)[-2:]) == {0, 1}
