"""Learn++ and Learn++.MT baselines built from SVM base learners.

Each increment adds a sequence of hypotheses. A hypothesis is a one-vs-one
SVM unit (fixed rbf kernel, gamma = 1/dim, C = 1, uniform decision weights)
trained on a subset drawn from the increment according to a distribution D.
Its weighted error under D decides whether it is kept (error < 1/2) and sets
its vote weight ln(1/beta) with beta = error / (1 - error). The composite of
all hypotheses so far, voting with the learner's rule, then reweights D:
instances it classifies correctly are multiplied by the composite's own
beta, so later draws concentrate on what the ensemble still gets wrong.
A composite error of 1/2 or more discards the draw; once the retries run
out the best discarded draw is kept and D moves only slightly.

Learn++ predicts by a weighted majority of the hypotheses. Learn++.MT first
measures, per class c, how strongly the hypotheses trained on c agree on c,
P(c), and scales the weight of every hypothesis not trained on c by
(1 - P(c)) before tallying.

No raw samples are retained across increments; a state is only its
hypotheses.
"""

from ilearn.data.datasets import SCALER_MODES, fit_scaler
from ilearn.learn.kernels import KernelSpec
from ilearn.learn.multiclass import (Ensemble, argmax_lowest, make_unit,
                                     vote_batch)
from ilearn.learn.svm import train_smo
from ilearn.util.randit import RandomStream, derive_seed, resolve_seed

from dataclasses import asdict, dataclass
from itertools import combinations
from typing import Optional
import logging
import math

import numpy as np

logger = logging.getLogger(__name__)

VARIANTS = ("learnpp", "learnpp_mt")

# Errors below this floor are clamped so that vote weights stay finite
ERROR_FLOOR = 1e-6

# Composite error recorded for a hypothesis accepted after its composite
# rejections ran out
COMPOSITE_CEILING = 0.499

#=============================================================================

class LearnppError(RuntimeError):
    """Raised when no acceptable weak hypothesis can be produced."""

#=============================================================================

@dataclass(frozen=True)
class LearnppConfig:
    """Learn++ settings.

    Attributes:
    hypotheses_per_increment -- hypotheses added per increment (default 5)
    subset_fraction -- share of the increment drawn per hypothesis
        (default 0.5)
    retry_budget -- rejected draws tolerated per hypothesis (default 10); one
        more raises LearnppError. Draws rejected only for their composite
        error have a budget of the same size, after which the best of them
        is kept
    gamma -- rbf width of the base learner (default None, meaning 1/dim)
    c -- soft margin of the base learner (default 1)
    smo_tol -- SMO tolerance (default 1e-3)
    max_passes -- SMO budget in passes (default 10)
    max_hypotheses -- cap per increment when the count is chosen on a
        validation set (default 20)
    scaler_mode -- "minmax" (default) or "optdigits"
    seed -- master seed (default 0; -1 for random)
    """

    hypotheses_per_increment: int = 5
    subset_fraction: float = 0.5
    retry_budget: int = 10
    gamma: Optional[float] = None
    c: float = 1.0
    smo_tol: float = 1e-3
    max_passes: int = 10
    max_hypotheses: int = 20
    scaler_mode: str = "minmax"
    seed: int = 0

    def __post_init__(self):
        if self.hypotheses_per_increment < 1:
            raise ValueError("hypotheses per increment must be at least 1")
        if not 0 < self.subset_fraction <= 1:
            raise ValueError("subset fraction must be in (0,1]")
        if self.retry_budget < 0:
            raise ValueError("retry budget must be nonnegative")
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.c <= 0:
            raise ValueError("soft margin must be positive")
        if self.max_hypotheses < 1:
            raise ValueError("max hypotheses must be at least 1")
        if self.scaler_mode not in SCALER_MODES:
            raise ValueError(f"unknown scaler mode {self.scaler_mode!r}")
        object.__setattr__(self, "seed", resolve_seed(self.seed))

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)

#=============================================================================

@dataclass(frozen=True)
class WeakHypothesis:
    """A base unit with its Learn++ vote weight.

    Attributes:
    unit -- MulticlassUnit with uniform decision weights
    vote_weight -- ln(1/beta)
    error -- weighted training error under D when it was accepted
    trained_classes -- classes the unit was trained on
    """

    unit: object
    vote_weight: float
    error: float
    trained_classes: tuple

    def __post_init__(self):
        if not math.isfinite(self.vote_weight):
            raise ValueError("vote weight must be finite")
        if not 0 <= self.error < 0.5:
            raise ValueError("hypothesis error must be in [0, 0.5)")
        object.__setattr__(self, "trained_classes",
                           tuple(sorted(int(c) for c in self.trained_classes)))

    @property
    def beta(self):
        e = max(self.error, ERROR_FLOOR)
        return e / (1.0 - e)

#-----------------------------------------------------------------------------

@dataclass(frozen=True)
class LearnppState:
    """The ordered hypotheses of a Learn++ ensemble."""

    hypotheses: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "hypotheses", tuple(self.hypotheses))

    @property
    def classes(self):
        """Sorted union of the trained classes of all hypotheses."""

        return tuple(sorted(set().union(*(h.trained_classes
                                          for h in self.hypotheses))))

    @property
    def dim(self):
        return self.hypotheses[0].unit.scaler.dim if self.hypotheses else None

    def __len__(self):
        return len(self.hypotheses)

#=============================================================================

def accepts_error(error):
    """Whether a hypothesis with this weighted error is kept (error < 1/2)."""

    return error < 0.5

#-----------------------------------------------------------------------------

def vote_weight(error):
    """Returns ln(1/beta), beta = error/(1-error), for an accepted error."""

    if not accepts_error(error):
        raise ValueError("errors of 1/2 or more carry no vote weight")
    e = max(float(error), ERROR_FLOOR)
    return math.log((1.0 - e) / e)

#=============================================================================

def train_base_unit(data, scaler, cfg):
    """Trains the fixed-kernel one-vs-one SVM used as a weak learner."""

    gamma = cfg.gamma if cfg.gamma is not None else 1.0 / data.dim
    kernel = KernelSpec.rbf(gamma)
    Z = scaler.transform(data.features)
    models = []
    for neg, pos in combinations(data.classes, 2):
        rows = np.isin(data.labels, (neg, pos))
        y = np.where(data.labels[rows] == pos, 1.0, -1.0)
        models.append(train_smo(Z[rows], y, kernel, cfg.c, tol=cfg.smo_tol,
                                max_passes=cfg.max_passes, pair=(neg, pos)))
    return make_unit(models, scaler)

#-----------------------------------------------------------------------------

def _hypothesis_predictions(hypotheses, X):
    return np.column_stack([vote_batch(Ensemble((h.unit,)), X)[0]
                            for h in hypotheses])

#-----------------------------------------------------------------------------

def _weighted_tally(predictions, weights, classes):
    onehot = predictions[:, :, None] == np.asarray(classes)[None, None, :]
    return np.einsum("nh,nhk->nk", weights, onehot.astype(np.float64))

#-----------------------------------------------------------------------------

def _check_state(state, X):
    if not state.hypotheses:
        raise ValueError("cannot predict with an empty Learn++ state")
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[1] != state.dim:
        raise ValueError(f"expected {state.dim} features, got {X.shape[1]}")
    return X

#-----------------------------------------------------------------------------

def predict_learnpp_batch(state, X):
    """Learn++ weighted majority vote for each row of X."""

    X = _check_state(state, X)
    classes = state.classes
    predictions = _hypothesis_predictions(state.hypotheses, X)
    weights = np.array([h.vote_weight for h in state.hypotheses])
    scores = _weighted_tally(predictions,
                             np.broadcast_to(weights, predictions.shape),
                             classes)
    return np.asarray(classes)[argmax_lowest(scores)]

def predict_learnpp(state, x):
    """Learn++ prediction for one raw feature vector."""

    return int(predict_learnpp_batch(state, np.asarray(x).reshape(1, -1))[0])

#-----------------------------------------------------------------------------

def mt_effective_weights(state, predictions):
    """Returns the Learn++.MT per-sample hypothesis weights.

    Positional arguments:
    state -- LearnppState
    predictions -- class chosen by each hypothesis, shape (n, H)

    For each class c, P(c) is the vote mass for c among hypotheses trained
    on c over the total mass of those hypotheses. A hypothesis's weight is
    multiplied by (1 - P(c)) for every known class c it was not trained on.
    """

    classes = np.asarray(state.classes)
    weights = np.array([h.vote_weight for h in state.hypotheses])
    trained = np.array([[c in h.trained_classes for c in classes]
                        for h in state.hypotheses])
    onehot = (predictions[:, :, None] == classes[None, None, :]).astype(
        np.float64)
    mass = (weights[:, None] * trained).sum(axis=0)
    support = np.einsum("h,hk,nhk->nk", weights, trained.astype(np.float64),
                        onehot)
    confidence = np.divide(support, mass, out=np.zeros_like(support),
                           where=mass > 0)
    reduction = np.prod(np.where(trained[None, :, :], 1.0,
                                 1.0 - confidence[:, None, :]), axis=2)
    return weights[None, :] * reduction

#-----------------------------------------------------------------------------

def predict_learnpp_mt_batch(state, X):
    """Learn++.MT prediction for each row of X."""

    X = _check_state(state, X)
    predictions = _hypothesis_predictions(state.hypotheses, X)
    scores = _weighted_tally(predictions,
                             mt_effective_weights(state, predictions),
                             state.classes)
    return np.asarray(state.classes)[argmax_lowest(scores)]

def predict_learnpp_mt(state, x):
    """Learn++.MT prediction for one raw feature vector."""

    return int(predict_learnpp_mt_batch(state,
                                        np.asarray(x).reshape(1, -1))[0])

#-----------------------------------------------------------------------------

PREDICTORS = {"learnpp": predict_learnpp_batch,
              "learnpp_mt": predict_learnpp_mt_batch}

#=============================================================================

def _grow(state, increment, count, cfg, variant="learnpp"):
    """Yields the state after each hypothesis accepted on an increment.

    The composite hypothesis that drives the distribution update votes with
    the rule of the given variant.
    """

    if len(increment.classes) < 2:
        raise ValueError("an increment needs at least two classes")
    if state.hypotheses and increment.dim != state.dim:
        raise ValueError(f"increment has dim {increment.dim}, state expects "
                         f"{state.dim}")

    composite_rule = PREDICTORS[variant]
    stream = RandomStream(derive_seed(cfg.seed, len(state)))
    rng = stream.generator
    scaler = fit_scaler(increment, cfg.scaler_mode)
    n = len(increment)
    size = min(n, max(2, int(round(cfg.subset_fraction * n))))
    y = increment.labels
    D = np.full(n, 1.0 / n)
    hypotheses = list(state.hypotheses)

    for t in range(count):
        failures = 0
        held = []
        while True:
            if failures > cfg.retry_budget:
                raise LearnppError("cannot produce weak hypothesis with "
                                   "ε < 0.5")
            if len(held) > cfg.retry_budget:
                # Keep the least harmful draw and let D move only slightly
                composite_error, candidate, composite, error = min(
                    held, key=lambda entry: entry[0])
                logger.warning("accepting hypothesis %d with composite error "
                               "%.4f after %d composite rejections",
                               len(hypotheses) + 1, composite_error,
                               len(held))
                composite_error = COMPOSITE_CEILING
                break
            rows = np.sort(rng.choice(n, size=size, replace=False, p=D))
            subset = increment.subset(rows)
            if len(subset.classes) < 2:
                failures += 1
                continue
            unit = train_base_unit(subset, scaler, cfg)
            guess = vote_batch(Ensemble((unit,)), increment.features)[0]
            error = float(D[guess != y].sum())
            if not accepts_error(error):
                logger.debug("hypothesis rejected with error %.4f", error)
                failures += 1
                continue
            candidate = WeakHypothesis(unit, vote_weight(error), error,
                                       unit.classes)
            composite = composite_rule(
                LearnppState(hypotheses + [candidate]), increment.features)
            composite_error = float(D[composite != y].sum())
            if not accepts_error(composite_error):
                # older hypotheses can outvote every new one at first
                logger.debug("composite rejected with error %.4f",
                             composite_error)
                held.append((composite_error, candidate, composite, error))
                continue
            break

        hypotheses.append(candidate)
        e = max(composite_error, ERROR_FLOOR)
        D = np.where(composite == y, D * (e / (1.0 - e)), D)
        D = D / D.sum()
        logger.debug("hypothesis %d: error %.4f, weight %.4f, composite "
                     "error %.4f", len(hypotheses), error,
                     candidate.vote_weight, composite_error)
        yield LearnppState(tuple(hypotheses)), D

#-----------------------------------------------------------------------------

def train_increment_learnpp(state, increment, t_count=None, cfg=None,
                            variant="learnpp"):
    """Adds t_count hypotheses trained on one increment.

    Positional arguments:
    state -- LearnppState to extend
    increment -- Dataset of the new data only

    Keyword arguments:
    t_count -- hypotheses to add (default cfg.hypotheses_per_increment)
    cfg -- LearnppConfig (default LearnppConfig())
    variant -- voting rule of the composite hypothesis, "learnpp" (default)
        or "learnpp_mt"
    """

    cfg = LearnppConfig() if cfg is None else cfg
    if variant not in PREDICTORS:
        raise ValueError(f"unknown Learn++ variant {variant!r}")
    t_count = cfg.hypotheses_per_increment if t_count is None else t_count
    if t_count < 1:
        raise ValueError("t_count must be at least 1")
    for state, _ in _grow(state, increment, t_count, cfg, variant):
        pass
    logger.info("Learn++ state now holds %d hypotheses over classes %s",
                len(state), list(state.classes))
    return state

#-----------------------------------------------------------------------------

def train_increment_validated(state, increment, validation, cfg=None,
                              variant="learnpp_mt"):
    """Adds hypotheses while a validation set says the ensemble improves.

    Up to cfg.max_hypotheses hypotheses are generated; the returned state
    keeps the shortest prefix with the best validation accuracy under the
    given variant's predictor.
    """

    cfg = LearnppConfig() if cfg is None else cfg
    if variant not in PREDICTORS:
        raise ValueError(f"unknown Learn++ variant {variant!r}")
    if len(validation) == 0:
        raise ValueError("validation set must not be empty")
    predict = PREDICTORS[variant]
    best, best_accuracy = None, -1.0
    for grown, _ in _grow(state, increment, cfg.max_hypotheses, cfg,
                          variant):
        accuracy = float(np.mean(predict(grown, validation.features)
                                 == validation.labels))
        if accuracy > best_accuracy:
            best, best_accuracy = grown, accuracy
    logger.info("validation kept %d of %d new hypotheses (accuracy %.3f)",
                len(best) - len(state), cfg.max_hypotheses, best_accuracy)
    return best

#=============================================================================

class LearnppLearner:
    """A container for incrementally training a Learn++ or Learn++.MT state.

    Mirrors IlugaLearner's learn/predict interface for the harness.
    """

    #-------------------------------------------------------------------------

    def __init__(self, cfg=None, variant="learnpp_mt", state=None):
        """Learn++ learner constructor.

        Keyword arguments:
        cfg -- LearnppConfig (default LearnppConfig())
        variant -- "learnpp" or "learnpp_mt" (default "learnpp_mt")
        state -- starting LearnppState (default empty)
        """

        if variant not in VARIANTS:
            raise ValueError(f"unknown Learn++ variant {variant!r}")
        self.cfg = LearnppConfig() if cfg is None else cfg
        self.variant = variant
        self.state = LearnppState() if state is None else state

    #-------------------------------------------------------------------------

    def learn(self, increment, validation=None):
        """Trains on one increment; with a validation set the number of
        hypotheses is chosen on it."""

        if validation is None:
            self.state = train_increment_learnpp(self.state, increment,
                                                 cfg=self.cfg,
                                                 variant=self.variant)
        else:
            self.state = train_increment_validated(self.state, increment,
                                                   validation, self.cfg,
                                                   self.variant)
        return self.state

    #-------------------------------------------------------------------------

    def predict(self, X):
        """Returns the predicted class of each row of X."""

        return PREDICTORS[self.variant](self.state, X)

    #-------------------------------------------------------------------------

    @property
    def model(self):
        return self.state
