"""One-vs-one units and potential-vote-normalized weighted majority voting.

A MulticlassUnit holds one binary SVM per unordered pair of the classes it
was trained on. Every binary classifier carries two voting weights, one for
each of its two decisions. An Ensemble is an ordered tuple of units.

Voting: every binary classifier of every unit scales x with its unit's
scaler, decides for one of its two classes, and adds the weight of that
decision divided by the class's number of potential votes (the number of
binary classifiers in the whole ensemble that can vote for it). The class
with the highest score wins; near-equal scores (within a relative 1e-12)
count as ties and go to the lowest class id.
"""

from ilearn.learn.svm import predict_many

from dataclasses import dataclass
from itertools import combinations
import logging
import math

import numpy as np

logger = logging.getLogger(__name__)

TIE_TOLERANCE = 1e-12

#=============================================================================

@dataclass(frozen=True)
class WeightedBinaryClassifier:
    """A binary SVM plus one voting weight for each of its decisions."""

    model: object
    weight_neg: float = 1.0
    weight_pos: float = 1.0

    def __post_init__(self):
        for name in ("weight_neg", "weight_pos"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and nonnegative")
            object.__setattr__(self, name, value)

    @property
    def pair(self):
        return self.model.pair

    def reweighted(self, weight_neg, weight_pos):
        return WeightedBinaryClassifier(self.model, weight_neg, weight_pos)

#-----------------------------------------------------------------------------

@dataclass(frozen=True)
class MulticlassUnit:
    """One-vs-one bundle over a set of classes, with its feature scaler.

    Classifiers are stored in the order of combinations(sorted(classes), 2),
    each pair covered exactly once with pair = (lower id, higher id).
    """

    classifiers: tuple
    classes: tuple
    scaler: object

    def __post_init__(self):
        classes = tuple(sorted(int(c) for c in set(self.classes)))
        if len(classes) < 2:
            raise ValueError("a unit needs at least two classes")
        classifiers = tuple(self.classifiers)
        expected = list(combinations(classes, 2))
        pairs = [tuple(wc.pair) for wc in classifiers]
        if pairs != expected:
            raise ValueError("unit classifiers must cover every class pair "
                             "exactly once, in sorted order")
        object.__setattr__(self, "classes", classes)
        object.__setattr__(self, "classifiers", classifiers)

    @property
    def weights(self):
        """Flat weight vector (neg, pos, neg, pos, ...) in classifier order."""

        return np.array([w for wc in self.classifiers
                         for w in (wc.weight_neg, wc.weight_pos)])

    def with_weights(self, weights):
        """Returns a copy of the unit with a new flat weight vector."""

        weights = np.asarray(weights, dtype=np.float64).reshape(-1)
        if weights.shape[0] != 2 * len(self.classifiers):
            raise ValueError("expected two weights per binary classifier")
        classifiers = tuple(wc.reweighted(weights[2*k], weights[2*k + 1])
                            for k, wc in enumerate(self.classifiers))
        return MulticlassUnit(classifiers, self.classes, self.scaler)

#-----------------------------------------------------------------------------

@dataclass(frozen=True)
class Ensemble:
    """An ordered, immutable collection of multiclass units."""

    units: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "units", tuple(self.units))

    @property
    def known_classes(self):
        """Sorted union of the class sets of all units."""

        return tuple(sorted(set().union(*(u.classes for u in self.units))))

    @property
    def dim(self):
        return self.units[0].scaler.dim if self.units else None

    def __len__(self):
        return len(self.units)

#=============================================================================

def make_unit(models, scaler, weights=None):
    """Builds a unit from binary models given in pair order.

    Positional arguments:
    models -- BinarySvmModels, one per class pair
    scaler -- Scaler applied to raw inputs before the models see them

    Keyword arguments:
    weights -- flat (neg, pos, ...) weight vector (default all ones)
    """

    models = list(models)
    if weights is None:
        weights = np.ones(2 * len(models))
    weights = np.asarray(weights, dtype=np.float64)
    classes = set()
    classifiers = []
    for k, model in enumerate(models):
        classes.update(model.pair)
        classifiers.append(WeightedBinaryClassifier(model, weights[2*k],
                                                    weights[2*k + 1]))
    return MulticlassUnit(tuple(classifiers), tuple(classes), scaler)

#-----------------------------------------------------------------------------

def add_unit(ensemble, unit):
    """Returns a new ensemble with the unit appended; prior units untouched."""

    if ensemble.units and unit.scaler.dim != ensemble.dim:
        raise ValueError("unit dimensionality differs from the ensemble's")
    return Ensemble(ensemble.units + (unit,))

#-----------------------------------------------------------------------------

def potential_votes(ensemble):
    """Returns class -> number of binary classifiers able to vote for it."""

    counts = {}
    for unit in ensemble.units:
        for wc in unit.classifiers:
            for c in wc.pair:
                counts[c] = counts.get(c, 0) + 1
    return dict(sorted(counts.items()))

#=============================================================================

def unit_decisions(unit, X):
    """Returns the class chosen by each binary classifier of a unit.

    Positional arguments:
    unit -- MulticlassUnit
    X -- raw input matrix (n, dim)

    Returns:
    integer array (n, number of classifiers) of class ids
    """

    Z = unit.scaler.transform(np.asarray(X, dtype=np.float64))
    if Z.ndim == 1:
        Z = Z.reshape(1, -1)
    if not unit.classifiers:
        return np.zeros((Z.shape[0], 0), dtype=np.int64)
    return np.column_stack([predict_many(wc.model, Z)
                            for wc in unit.classifiers]).astype(np.int64)

#-----------------------------------------------------------------------------

def tally(decisions, pairs, weights, classes):
    """Sums decision weights per class.

    Positional arguments:
    decisions -- class ids chosen, shape (n, m)
    pairs -- the m (neg, pos) pairs
    weights -- flat (neg, pos, ...) weight vector of length 2m
    classes -- sorted class ids indexing the output columns

    Returns:
    raw (unnormalized) score matrix of shape (n, len(classes))
    """

    column = {c: k for k, c in enumerate(classes)}
    weights = np.asarray(weights, dtype=np.float64)
    scores = np.zeros((decisions.shape[0], len(classes)))
    for k, (neg, pos) in enumerate(pairs):
        is_pos = decisions[:, k] == pos
        scores[:, column[pos]] += np.where(is_pos, weights[2*k + 1], 0.0)
        scores[:, column[neg]] += np.where(is_pos, 0.0, weights[2*k])
    return scores

#-----------------------------------------------------------------------------

def argmax_lowest(scores):
    """Row-wise argmax where near-ties go to the lowest column."""

    scores = np.asarray(scores, dtype=np.float64)
    top = scores.max(axis=1, keepdims=True)
    near = scores >= top - TIE_TOLERANCE * np.abs(top)
    return np.argmax(near, axis=1)

#-----------------------------------------------------------------------------

def raw_scores(ensemble, X, classes=None):
    """Returns unnormalized per-class weight sums over all units."""

    classes = ensemble.known_classes if classes is None else classes
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    scores = np.zeros((X.shape[0], len(classes)))
    for unit in ensemble.units:
        scores += tally(unit_decisions(unit, X),
                        [wc.pair for wc in unit.classifiers], unit.weights,
                        classes)
    return scores

#-----------------------------------------------------------------------------

def vote_batch(ensemble, X):
    """Weighted majority vote for each row of X.

    Returns:
    (predicted class ids, score matrix with one column per known class)
    """

    if not ensemble.units:
        raise ValueError("cannot vote with an empty ensemble")
    classes = ensemble.known_classes
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[1] != ensemble.dim:
        raise ValueError(f"expected {ensemble.dim} features, got "
                         f"{X.shape[1]}")
    pv = potential_votes(ensemble)
    scores = raw_scores(ensemble, X, classes) / np.array(
        [pv[c] for c in classes], dtype=np.float64)
    return np.asarray(classes)[argmax_lowest(scores)], scores

#-----------------------------------------------------------------------------

def vote(ensemble, x):
    """Weighted majority vote for a single raw feature vector.

    Returns:
    (predicted class, dict class -> normalized score) over the known
        classes; classes outside the ensemble implicitly score 0
    """

    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("expected a single feature vector")
    predicted, scores = vote_batch(ensemble, x)
    return (int(predicted[0]),
            {c: float(s) for c, s in zip(ensemble.known_classes, scores[0])})

#-----------------------------------------------------------------------------

def plain_majority(ensemble, x):
    """Unweighted one-vs-one majority vote (one vote per binary classifier,
    ties to the lowest class id)."""

    if not ensemble.units:
        raise ValueError("cannot vote with an empty ensemble")
    classes = ensemble.known_classes
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    counts = np.zeros((1, len(classes)))
    for unit in ensemble.units:
        decisions = unit_decisions(unit, x)[0]
        for d in decisions:
            counts[0, classes.index(int(d))] += 1
    return int(classes[int(np.argmax(counts[0]))])
