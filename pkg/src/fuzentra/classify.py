"""Inter-ictal vs pre-ictal classification harness.

Labels are encoded internally as -1 (inter-ictal, the negative class) and +1
(pre-ictal, the positive class). Every model exposes a real-valued score;
the predicted label is pre-ictal iff the score is strictly positive, so a
score of exactly zero falls to inter-ictal.
"""

from __future__ import annotations

import enum
import itertools
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, LengthMismatch, SingleClass, TooFewExamples

logger = logging.getLogger(__name__)

FEATURE_SCALES = (1, 2, 11, 12, 13, 14, 17, 18, 19, 20)


class Phase(str, enum.Enum):
    INTERICTAL = "interictal"
    PREICTAL = "preictal"


class ModelKind(str, enum.Enum):
    LDA = "lda"
    KNN = "knn"
    ADABOOST = "adaboost"


@dataclass(frozen=True, eq=False)
class SubjectFeatures:
    subject_id: str
    features: np.ndarray
    label: Phase

    def __post_init__(self):
        f = np.array(self.features, dtype=float)
        if f.ndim != 1 or not np.all(np.isfinite(f)):
            raise ValueError("features must be a finite 1-D vector")
        f.setflags(write=False)
        object.__setattr__(self, "features", f)
        object.__setattr__(self, "label", Phase(self.label))


def to_sign(labels) -> np.ndarray:
    """+1 for pre-ictal, -1 for inter-ictal; accepts Phase, str, bool or +-1."""
    out = []
    for lab in labels:
        if isinstance(lab, (Phase, str)):
            out.append(1 if Phase(lab) is Phase.PREICTAL else -1)
        elif isinstance(lab, (bool, np.bool_)):
            out.append(1 if lab else -1)
        else:
            v = int(lab)
            if v not in (-1, 1):
                raise ValueError(f"numeric labels must be +-1, got {lab!r}")
            out.append(v)
    return np.array(out, dtype=int)


def _label(score: float) -> Phase:
    return Phase.PREICTAL if score > 0 else Phase.INTERICTAL


def _sign(scores: np.ndarray) -> np.ndarray:
    return np.where(scores > 0, 1, -1)


# --- base models -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LdaModel:
    coef: np.ndarray
    intercept: float

    def score(self, X):
        return np.asarray(X, float) @ self.coef + self.intercept


def fit_lda(X, y, weights=None, ridge: float | None = None) -> LdaModel:
    """Two-class LDA with pooled (weighted) covariance.

    The ridge defaults to 1e-6 * trace(S) / d; pass 0 to disable.
    """
    X = np.asarray(X, float)
    w = np.full(len(y), 1.0 / len(y)) if weights is None else np.asarray(weights, float) / np.sum(weights)
    pos, neg = y > 0, y < 0
    wp, wn = w[pos].sum(), w[neg].sum()
    mu_p = w[pos] @ X[pos] / wp
    mu_n = w[neg] @ X[neg] / wn
    centred = X - np.where(pos[:, None], mu_p, mu_n)
    cov = (centred * w[:, None]).T @ centred
    d = X.shape[1]
    if ridge is None:
        ridge = 1e-6 * np.trace(cov) / d
    cov = cov + ridge * np.eye(d)
    coef = np.linalg.lstsq(cov, mu_p - mu_n, rcond=None)[0] if ridge == 0 else np.linalg.solve(cov, mu_p - mu_n)
    intercept = -coef @ (0.5 * (mu_p + mu_n)) + np.log(wp / wn)
    return LdaModel(coef, float(intercept))


@dataclass(frozen=True, eq=False)
class KnnModel:
    X: np.ndarray
    y: np.ndarray
    k: int

    def score(self, Xq):
        Xq = np.atleast_2d(np.asarray(Xq, float))
        d2 = ((Xq[:, None, :] - self.X[None, :, :]) ** 2).sum(axis=2)
        nearest = np.argsort(d2, axis=1, kind="stable")[:, : self.k]
        return self.y[nearest].mean(axis=1)


def fit_knn(X, y, k: int = 3) -> KnnModel:
    X = np.asarray(X, float)
    if len(y) < k + 1:
        raise TooFewExamples(f"kNN with k={k} needs at least {k + 1} examples")
    return KnnModel(X.copy(), np.asarray(y, float).copy(), int(k))


@dataclass(frozen=True, eq=False)
class StumpModel:
    feature: int
    threshold: float
    polarity: int

    def score(self, X):
        X = np.atleast_2d(np.asarray(X, float))
        return np.where(X[:, self.feature] > self.threshold, self.polarity, -self.polarity).astype(float)


def fit_stump(X, y, weights) -> StumpModel:
    """Depth-1 tree minimising weighted error over all features and
    midpoint thresholds. Ties go to the lowest feature, then polarity +1,
    then the lowest threshold."""
    X = np.asarray(X, float)
    w = np.asarray(weights, float)
    n = X.shape[0]
    order = np.argsort(X, axis=0, kind="stable")
    xs = np.take_along_axis(X, order, axis=0)
    wp = np.cumsum(np.where(y > 0, w, 0.0)[order], axis=0)
    wn = np.cumsum(np.where(y < 0, w, 0.0)[order], axis=0)
    # row 0: everything right of the threshold; row i+1: split after sorted i
    lp = np.vstack([np.zeros((1, X.shape[1])), wp[:-1]])
    ln = np.vstack([np.zeros((1, X.shape[1])), wn[:-1]])
    valid = np.vstack([np.ones((1, X.shape[1]), bool), xs[1:] > xs[:-1]])
    thresholds = np.vstack([xs[:1] - 1.0, 0.5 * (xs[:-1] + xs[1:])])
    # polarity +1: right side predicted positive
    err_plus = lp + (wn[-1] - ln)
    err_minus = ln + (wp[-1] - lp)
    err = np.stack([err_plus, err_minus])  # (polarity, split, feature)
    err[:, ~valid] = np.inf
    flat = np.transpose(err, (2, 0, 1)).ravel()
    j, pol, i = np.unravel_index(int(np.argmin(flat)), (X.shape[1], 2, n))
    return StumpModel(int(j), float(thresholds[i, j]), 1 if pol == 0 else -1)


@dataclass(frozen=True, eq=False)
class AdaBoostModel:
    learners: tuple
    alphas: np.ndarray
    kinds: tuple

    def score(self, X, rounds: int | None = None):
        X = np.atleast_2d(np.asarray(X, float))
        total = np.zeros(X.shape[0])
        for h, a in zip(self.learners[:rounds], self.alphas[:rounds]):
            total += a * _sign(h.score(X))
        return total

    def scaled(self, factor: float) -> "AdaBoostModel":
        return AdaBoostModel(self.learners, self.alphas * factor, self.kinds)


BASE_LEARNERS = ("lda", "knn", "stump")


def fit_adaboost(X, y, rng, k: int = 3, rounds: int = 8, base_learners=BASE_LEARNERS) -> AdaBoostModel:
    """Discrete AdaBoost; each round keeps the base learner with the lowest
    weighted training error. kNN, which has no native weighting, is fitted
    on a weighted bootstrap resample drawn from ``rng``."""
    X = np.asarray(X, float)
    n = len(y)
    w = np.full(n, 1.0 / n)
    learners, alphas, kinds = [], [], []
    for _ in range(rounds):
        candidates = []
        for kind in base_learners:
            if kind == "lda":
                h = fit_lda(X, y, w)
            elif kind == "knn":
                idx = rng.choice(n, size=n, replace=True, p=w)
                h = KnnModel(X[idx], y[idx].astype(float), min(k, n))
            elif kind == "stump":
                h = fit_stump(X, y, w)
            else:
                raise ValueError(f"unknown base learner {kind!r}")
            miss = _sign(h.score(X)) != y
            candidates.append((float(w[miss].sum()), kind, h, miss))
        err, kind, h, miss = min(candidates, key=lambda c: c[0])
        if err >= 0.5:
            break
        err = max(err, 1e-10)
        alpha = 0.5 * np.log((1.0 - err) / err)
        learners.append(h)
        alphas.append(alpha)
        kinds.append(kind)
        if err <= 1e-10:
            break
        w = w * np.exp(np.where(miss, alpha, -alpha))
        w /= w.sum()
    return AdaBoostModel(tuple(learners), np.array(alphas), tuple(kinds))


# --- public training / prediction ------------------------------------------


@dataclass(frozen=True, eq=False)
class TrainedModel:
    kind: ModelKind
    model: object
    n_features: int
    params: dict = field(default_factory=dict)

    def score(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, float))
        if X.shape[1] != self.n_features:
            raise DimensionMismatch(f"expected {self.n_features} features, got {X.shape[1]}")
        return self.model.score(X)


def _matrix(data):
    X = np.vstack([d.features for d in data])
    y = to_sign([d.label for d in data])
    return X, y


def train_arrays(kind, X, y, seed=0, k: int = 3, rounds: int = 8, ridge=None) -> TrainedModel:
    kind = ModelKind(kind)
    if len(np.unique(y)) < 2:
        raise SingleClass("training data contains a single class")
    if kind is ModelKind.LDA:
        model = fit_lda(X, y, ridge=ridge)
        params = {}
    elif kind is ModelKind.KNN:
        model = fit_knn(X, y, k)
        params = {"k": k}
    else:
        model = fit_adaboost(X, y, np.random.default_rng(seed), k=k, rounds=rounds)
        params = {"k": k, "rounds": rounds}
    return TrainedModel(kind, model, X.shape[1], params)


def train(kind, data: Sequence[SubjectFeatures], seed=0, k: int = 3, rounds: int = 8, ridge=None) -> TrainedModel:
    if not data:
        raise TooFewExamples("no training data")
    X, y = _matrix(data)
    return train_arrays(kind, X, y, seed=seed, k=k, rounds=rounds, ridge=ridge)


def predict(model: TrainedModel, x) -> tuple[Phase, float]:
    x = np.asarray(x, float)
    if x.ndim != 1:
        raise ValueError("predict takes a single feature vector")
    score = float(model.score(x[None, :])[0])
    return _label(score), score


# --- metrics ---------------------------------------------------------------


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    recall: float | None
    precision: float | None
    f_measure: float | None
    tp: int
    fp: int
    fn: int
    tn: int


def _ratio(num, den):
    return None if den == 0 else num / den


def compute_metrics(predictions, labels) -> Metrics:
    pred = to_sign(predictions)
    true = to_sign(labels)
    if pred.size != true.size:
        raise LengthMismatch("predictions and labels differ in length")
    if pred.size == 0:
        raise ValueError("need at least one prediction")
    tp = int(np.sum((pred > 0) & (true > 0)))
    fp = int(np.sum((pred > 0) & (true < 0)))
    fn = int(np.sum((pred < 0) & (true > 0)))
    tn = int(np.sum((pred < 0) & (true < 0)))
    recall = _ratio(tp, tp + fn)
    precision = _ratio(tp, tp + fp)
    if recall is None or precision is None:
        f = None
    else:
        f = _ratio(2 * precision * recall, precision + recall)
    return Metrics((tp + tn) / pred.size, recall, precision, f, tp, fp, fn, tn)


def roc_auc(scores, labels) -> tuple[np.ndarray, float]:
    """ROC points (fpr, tpr) from a sweep over unique scores, highest first,
    and the trapezoidal area. Tied scores move both rates together."""
    s = np.asarray(scores, float)
    y = to_sign(labels)
    n_pos = int(np.sum(y > 0))
    n_neg = int(np.sum(y < 0))
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("ROC needs both classes")
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    last = np.concatenate([np.flatnonzero(s[1:] != s[:-1]), [s.size - 1]])
    tp = np.cumsum(y > 0)[last]
    fp = np.cumsum(y < 0)[last]
    fpr = np.concatenate([[0.0], fp / n_neg])
    tpr = np.concatenate([[0.0], tp / n_pos])
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return np.column_stack([fpr, tpr]), auc


# --- cross-validation ------------------------------------------------------


def stratified_group_folds(y, groups, folds: int, rng) -> np.ndarray:
    """Fold index per example, keeping whole groups (subjects) together.

    Groups are placed greedily, least flexible first (groups holding both
    classes, then larger groups), each into the fold where its classes are
    currently scarcest. Shuffled group order and a shuffled fold priority
    break ties, so the partition is random but per-class fold counts stay
    within one of each other when every group holds at most one example
    per class.
    """
    y = np.asarray(y)
    groups = np.asarray(groups)
    uniq = list(dict.fromkeys(groups.tolist()))
    comp = {}
    for g in uniq:
        members = y[groups == g]
        comp[g] = np.array([np.sum(members < 0), np.sum(members > 0)], dtype=float)
    order = [uniq[i] for i in rng.permutation(len(uniq))]
    order.sort(key=lambda g: (-int(np.all(comp[g] > 0)), -comp[g].sum()))
    priority = rng.permutation(folds)
    counts = np.zeros((folds, 2))
    assign = {}
    for g in order:
        c = comp[g]
        new = counts + c
        present = c > 0
        best = min(range(folds), key=lambda f: (new[f][present].max(), new[f].sum(), priority[f]))
        counts[best] = new[best]
        assign[g] = best
    return np.array([assign[g] for g in groups.tolist()], dtype=int)


@dataclass(frozen=True)
class MetricSummary:
    mean: float | None
    sd: float | None
    n_defined: int


@dataclass(frozen=True, eq=False)
class CvSummary:
    kind: str
    folds: int
    repeats: int
    accuracy: MetricSummary
    recall: MetricSummary
    precision: MetricSummary
    f_measure: MetricSummary
    auc: MetricSummary
    roc_points: np.ndarray  # (101, 2) vertically averaged curve
    per_repeat: tuple = ()

    def metric(self, name) -> MetricSummary:
        return getattr(self, name)


def _summarise(values) -> MetricSummary:
    vals = np.array([v for v in values if v is not None], float)
    if vals.size == 0:
        return MetricSummary(None, None, 0)
    sd = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
    return MetricSummary(float(vals.mean()), sd, int(vals.size))


ROC_GRID = np.linspace(0.0, 1.0, 101)


def _vertical_roc(points: np.ndarray) -> np.ndarray:
    fpr, tpr = points[:, 0], points[:, 1]
    ux = np.unique(fpr)
    top = np.array([tpr[fpr == u].max() for u in ux])
    return np.interp(ROC_GRID, ux, top)


def _grid(kind: ModelKind):
    if kind is ModelKind.KNN:
        return [{"k": k} for k in (3, 1, 5)]
    if kind is ModelKind.ADABOOST:
        return [{"k": k, "rounds": r} for k, r in itertools.product((3, 1, 5), (8, 4, 16))]
    return [{}]


def _tune(kind: ModelKind, X, y, groups, seed_seq, folds: int, ridge):
    grid = _grid(kind)
    if len(grid) == 1:
        return grid[0]
    n_min = min(np.sum(y > 0), np.sum(y < 0))
    if n_min < folds or len(set(groups.tolist())) < folds:
        return grid[0]
    rng = np.random.default_rng(seed_seq)
    fold_of = stratified_group_folds(y, groups, folds, rng)
    correct = np.zeros(len(grid))
    for f in range(folds):
        tr, te = fold_of != f, fold_of == f
        if len(np.unique(y[tr])) < 2 or not te.any():
            continue
        if kind is ModelKind.KNN:
            for gi, p in enumerate(grid):
                if tr.sum() < p["k"] + 1:
                    continue
                model = fit_knn(X[tr], y[tr], p["k"])
                correct[gi] += np.sum(_sign(model.score(X[te])) == y[te])
        else:
            # boosting is sequential, so fewer rounds are prefixes of the
            # longest run: fit once per k and score each prefix
            max_rounds = max(p["rounds"] for p in grid)
            for k in dict.fromkeys(p["k"] for p in grid):
                model = fit_adaboost(X[tr], y[tr], np.random.default_rng([*seed_seq, f, k]), k=k, rounds=max_rounds)
                for gi, p in enumerate(grid):
                    if p["k"] == k:
                        correct[gi] += np.sum(_sign(model.score(X[te], rounds=p["rounds"])) == y[te])
    return grid[int(np.argmax(correct))]


def cross_validate_arrays(kind, X, y, groups, folds: int = 3, repeats: int = 100, seed: int = 0, tune: bool = True, ridge=None) -> CvSummary:
    kind = ModelKind(kind)
    X = np.asarray(X, float)
    y = np.asarray(y, int)
    groups = np.asarray(groups)
    for cls in (-1, 1):
        if np.sum(y == cls) < folds:
            raise TooFewExamples(f"each class needs at least {folds} examples for {folds}-fold CV")
    if len(set(groups.tolist())) < folds:
        raise TooFewExamples(f"need at least {folds} subjects for {folds}-fold CV")
    records = []
    curves = []
    for rep in range(repeats):
        rng = np.random.default_rng([seed, rep])
        fold_of = stratified_group_folds(y, groups, folds, rng)
        scores = np.zeros(len(y))
        for f in range(folds):
            tr, te = fold_of != f, fold_of == f
            if not te.any():
                continue
            if len(np.unique(y[tr])) < 2:
                raise SingleClass("a training split contains a single class")
            params = _tune(kind, X[tr], y[tr], groups[tr], [seed, rep, f, 1], folds, ridge) if tune else _grid(kind)[0]
            model = train_arrays(kind, X[tr], y[tr], seed=[seed, rep, f, 2], ridge=ridge, **params)
            scores[te] = model.score(X[te])
        m = compute_metrics(_sign(scores), y)
        points, auc = roc_auc(scores, y)
        curves.append(_vertical_roc(points))
        records.append({"accuracy": m.accuracy, "recall": m.recall, "precision": m.precision, "f_measure": m.f_measure, "auc": auc})
    for name in ("recall", "precision", "f_measure"):
        missing = sum(r[name] is None for r in records)
        if missing:
            logger.info("%s undefined in %d of %d repeats; excluded from summary", name, missing, repeats)
    return CvSummary(
        kind.value,
        folds,
        repeats,
        *(_summarise(r[name] for r in records) for name in ("accuracy", "recall", "precision", "f_measure", "auc")),
        roc_points=np.column_stack([ROC_GRID, np.mean(curves, axis=0)]),
        per_repeat=tuple(records),
    )


def cross_validate(kind, data: Sequence[SubjectFeatures], folds: int = 3, repeats: int = 100, seed: int = 0, tune: bool = True, ridge=None) -> CvSummary:
    """Repeated subject-grouped, class-stratified k-fold cross-validation.

    Held-out scores are pooled over the folds of each repeat; metrics and AUC
    are computed per repeat and summarised as mean and SD across repeats.
    """
    if not data:
        raise TooFewExamples("no data")
    X, y = _matrix(data)
    groups = np.array([d.subject_id for d in data])
    return cross_validate_arrays(kind, X, y, groups, folds, repeats, seed, tune, ridge)
