"""Per-participant feature vectors and cross-validated group classification."""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np
from sklearn.ensemble import GradientBoostingClassifier, RandomForestClassifier
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import StandardScaler
from sklearn.svm import LinearSVC

from .corpus import Group, TranscriptCorpus
from .derailment import DerailmentScore, WordFilter
from .modifiers import ModifierScores

K_VALUES = (1, 2, 3, 4, 5)
FEATURE_NAMES = (
    ("adj_similarity", "adv_similarity")
    + tuple(f"derail_all_k{k}" for k in K_VALUES)
    + tuple(f"derail_content_k{k}" for k in K_VALUES)
)
N_FEATURES = len(FEATURE_NAMES)


class FeatureError(ValueError):
    pass


class Classifier(str, enum.Enum):
    RANDOM_FOREST = "random_forest"
    GRADIENT_BOOSTING = "gradient_boosting"
    LINEAR_SVM = "linear_svm"


DEFAULT_HYPERPARAMS: dict[Classifier, dict[str, Any]] = {
    Classifier.RANDOM_FOREST: {"n_estimators": 200, "max_depth": None, "max_features": "sqrt", "bootstrap": True},
    Classifier.GRADIENT_BOOSTING: {"n_estimators": 100, "max_depth": 3, "learning_rate": 0.1},
    Classifier.LINEAR_SVM: {"loss": "hinge", "penalty": "l2", "C": 1.0, "max_iter": 100000, "standardize": True},
}


@dataclass(frozen=True)
class FeatureVector:
    participant_id: str
    label: Group
    features: tuple[float, ...]
    imputed_mask: tuple[bool, ...]


@dataclass
class FoldMetrics:
    fold: int
    n_test: int
    accuracy: float
    precision: float
    recall: float


@dataclass
class CvReport:
    classifier: Classifier
    accuracy: float
    precision: float
    recall: float
    per_fold: list[FoldMetrics]
    importances: list[tuple[int, float]] | None
    seed: int
    k_folds: int
    hyperparams: dict[str, Any] = field(default_factory=dict)
    n_samples: int = 0

    def to_dict(self) -> dict[str, Any]:
        def fold_mean(name):
            return math.fsum(getattr(f, name) for f in self.per_fold) / len(self.per_fold)

        return {
            "classifier": self.classifier.value,
            "seed": self.seed,
            "k_folds": self.k_folds,
            "n_samples": self.n_samples,
            "hyperparams": self.hyperparams,
            "pooled": {"accuracy": self.accuracy, "precision": self.precision, "recall": self.recall},
            "fold_mean": {m: fold_mean(m) for m in ("accuracy", "precision", "recall")},
            "per_fold": [asdict(f) for f in self.per_fold],
            "feature_names": list(FEATURE_NAMES),
            "importances": None
            if self.importances is None
            else [{"index": i, "feature": _feature_name(i, len(self.importances)), "importance": v}
                  for i, v in self.importances],
        }


def _feature_name(i: int, n: int) -> str:
    return FEATURE_NAMES[i] if n == N_FEATURES else f"f{i}"


# ------------------------------------------------------------------------------ features


def feature_rows(
    corpus: TranscriptCorpus,
    derailment: Mapping[tuple[int, WordFilter], Mapping[str, DerailmentScore | float | None]],
    modifiers: Mapping[str, ModifierScores],
) -> dict[str, list[float | None]]:
    """Raw, possibly incomplete, feature values per participant in FEATURE_NAMES order."""

    def value(x):
        return x.value if isinstance(x, DerailmentScore) else x

    rows = {}
    for p in corpus.participants:
        m = modifiers.get(p.id)
        row = [m.adjective_score if m else None, m.adverb_score if m else None]
        for f in (WordFilter.ALL, WordFilter.CONTENT):
            for k in K_VALUES:
                try:
                    scores = derailment[(k, f)]
                except KeyError:
                    raise FeatureError(f"no derailment scores for k={k}, filter={f.value}") from None
                row.append(value(scores.get(p.id)))
        rows[p.id] = row
    return rows


def build_feature_vectors(
    corpus: TranscriptCorpus,
    derailment: Mapping[tuple[int, WordFilter], Mapping[str, DerailmentScore | float | None]],
    modifiers: Mapping[str, ModifierScores],
) -> list[FeatureVector]:
    """One 12-feature vector per participant; gaps filled with the feature's mean."""
    rows = feature_rows(corpus, derailment, modifiers)
    means = []
    for j, name in enumerate(FEATURE_NAMES):
        defined = [r[j] for r in rows.values() if r[j] is not None]
        if not defined:
            raise FeatureError(f"feature {name!r} is undefined for every participant")
        means.append(math.fsum(defined) / len(defined))
    out = []
    for p in corpus.participants:
        row = rows[p.id]
        mask = tuple(v is None for v in row)
        feats = tuple(float(means[j] if v is None else v) for j, v in enumerate(row))
        out.append(FeatureVector(p.id, p.group, feats, mask))
    return out


# --------------------------------------------------------------------------------- folds


def stratified_folds(labels: Sequence, k_folds: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Seeded stratified k-fold split.

    Each class is shuffled and dealt round-robin over the folds, continuing
    where the previous class stopped, so fold sizes differ by at most one and
    every fold holds floor or ceil of its class share. Classes smaller than
    ``k_folds`` simply leave some folds without that class.
    """
    n = len(labels)
    if k_folds < 2:
        raise ValueError("k_folds must be >= 2")
    if k_folds > n:
        raise ValueError(f"k_folds={k_folds} exceeds sample size {n}")
    rng = np.random.default_rng(seed)
    labels = list(labels)
    fold_of = np.empty(n, dtype=np.int64)
    pos = 0
    for cls in sorted(set(labels), key=str):
        idx = np.array([i for i, y in enumerate(labels) if y == cls], dtype=np.int64)
        rng.shuffle(idx)
        for i in idx:
            fold_of[i] = pos % k_folds
            pos += 1
    everything = np.arange(n)
    return [(everything[fold_of != f], everything[fold_of == f]) for f in range(k_folds)]


# ------------------------------------------------------------------------------ training


def make_estimator(kind: Classifier, hyperparams: Mapping[str, Any], seed: int):
    hp = dict(hyperparams)
    if kind is Classifier.RANDOM_FOREST:
        return RandomForestClassifier(random_state=seed, n_jobs=1, **hp)
    if kind is Classifier.GRADIENT_BOOSTING:
        return GradientBoostingClassifier(random_state=seed, **hp)
    if kind is Classifier.LINEAR_SVM:
        standardize = hp.pop("standardize", True)
        svm = LinearSVC(random_state=seed, dual=True, **hp)
        return make_pipeline(StandardScaler(), svm) if standardize else svm
    raise ValueError(f"unknown classifier {kind!r}")


def _precision_recall(y_true: np.ndarray, y_pred: np.ndarray) -> tuple[float, float]:
    tp = int(np.sum(y_true & y_pred))
    fp = int(np.sum(~y_true & y_pred))
    fn = int(np.sum(y_true & ~y_pred))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return precision, recall


def cross_validate(
    kind: Classifier | str,
    X: np.ndarray,
    y: np.ndarray,
    k_folds: int = 10,
    seed: int = 0,
    hyperparams: Mapping[str, Any] | None = None,
) -> tuple[CvReport, np.ndarray]:
    """Cross-validate on a raw matrix. ``y`` is boolean, True for the patient class.

    Returns the report and the out-of-fold predictions.
    """
    kind = Classifier(kind)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=bool)
    if len(np.unique(y)) < 2:
        raise ValueError("classification needs both groups; only one class present")
    hp = {**DEFAULT_HYPERPARAMS[kind], **(hyperparams or {})}
    pred = np.zeros_like(y)
    per_fold = []
    importances = []
    for f, (train, test) in enumerate(stratified_folds(y, k_folds, seed)):
        if len(np.unique(y[train])) < 2:
            raise ValueError(f"fold {f} training split holds a single class")
        model = make_estimator(kind, hp, seed)
        model.fit(X[train], y[train])
        pred[test] = model.predict(X[test]).astype(bool)
        precision, recall = _precision_recall(y[test], pred[test])
        per_fold.append(FoldMetrics(f, int(len(test)), float(np.mean(pred[test] == y[test])), precision, recall))
        if hasattr(model, "feature_importances_"):
            importances.append(model.feature_importances_)
    precision, recall = _precision_recall(y, pred)
    imp = None
    if importances:
        mean_imp = np.mean(importances, axis=0)
        total = mean_imp.sum()
        if total > 0:
            mean_imp = mean_imp / total
        imp = [(int(i), float(v)) for i, v in enumerate(mean_imp)]
    report = CvReport(
        kind, float(np.mean(pred == y)), precision, recall, per_fold, imp, seed, k_folds, hp, int(len(y))
    )
    return report, pred


def train_eval(
    kind: Classifier | str,
    vectors: Sequence[FeatureVector],
    k_folds: int = 10,
    seed: int = 0,
    hyperparams: Mapping[str, Any] | None = None,
) -> CvReport:
    X = np.array([v.features for v in vectors], dtype=np.float64)
    y = np.array([v.label is Group.PATIENT for v in vectors])
    return cross_validate(kind, X, y, k_folds, seed, hyperparams)[0]
