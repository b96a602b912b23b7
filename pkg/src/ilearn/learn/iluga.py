"""Incremental learning with GA-optimized SVM units (ILUGA).

Each call to learn_increment() trains m new one-vs-one units on the new
increment only, and appends them to the ensemble. Training one unit has two
stages:

1. The increment is split into Train, Val1 and Val2 (a fresh stratified split
   per unit). For every class pair a GA searches the kernel family, its
   hyperparameters and the soft margin C; a candidate's fitness is the pair
   accuracy on Val1 of an SVM trained on the Train slice of that pair.
2. A second GA searches the two decision weights of every binary classifier;
   a candidate's fitness is the accuracy on Val2 of the weighted majority
   vote of the whole ensemble (earlier units with their frozen weights plus
   the candidate unit). Generation 0 always contains the all-ones weights.

Earlier units are never modified and no earlier data is ever needed: the
only inputs are the ensemble and the new increment.
"""

from ilearn.data.datasets import SCALER_MODES, Dataset, fit_scaler, tri_split
from ilearn.learn.ga import (WORST_FITNESS, CategoricalGene, GaConfig, RealGene,
                             memoize_fitness, run_ga)
from ilearn.learn.kernels import KernelSpec
from ilearn.learn.modelio import load_model, save_model
from ilearn.learn.multiclass import (Ensemble, add_unit, argmax_lowest,
                                     make_unit, potential_votes, raw_scores,
                                     tally, unit_decisions, vote, vote_batch)
from ilearn.learn.svm import predict_many, train_smo
from ilearn.util.randit import derive_seed, resolve_seed

from dataclasses import asdict, dataclass, field
from itertools import combinations
from typing import NamedTuple
import logging
import os

import numpy as np

logger = logging.getLogger(__name__)

STAGE1_FAMILIES = ("quadratic", "rbf", "polynomial", "tanh")

#=============================================================================

@dataclass(frozen=True)
class IlugaConfig:
    """ILUGA settings.

    Attributes:
    units_per_increment -- units m trained per increment (default 2)
    split_ratios -- Train/Val1/Val2 fractions (default (0.6, 0.2, 0.2))
    stage1_ga -- GaConfig of the per-pair kernel search
    stage2_ga -- GaConfig of the weight search
    c_range -- soft margin interval, searched in log space
        (default (1e-2, 1e3))
    families -- kernel families open to stage 1
    degrees -- polynomial degrees open to stage 1 (default 2..5)
    gamma_range -- rbf width interval, log space (default (1e-3, 1e1))
    coef_range -- quadratic/polynomial inhomogeneous term (default (0, 2))
    tanh_scale_range -- tanh slope interval, log space (default (1e-3, 1))
    tanh_offset_range -- tanh intercept interval (default (-2, 0))
    smo_tol -- SMO KKT tolerance (default 1e-3)
    max_passes -- SMO budget in passes (default 10)
    scaler_mode -- "minmax" (default) or "optdigits"
    seed -- master seed (default 0; -1 chooses and records a random one)

    The seeds inside stage1_ga and stage2_ga are ignored; every GA run gets
    a seed derived from the master seed and the unit's position in the
    ensemble.
    """

    units_per_increment: int = 2
    split_ratios: tuple = (0.6, 0.2, 0.2)
    stage1_ga: GaConfig = field(default_factory=GaConfig)
    stage2_ga: GaConfig = field(default_factory=GaConfig)
    c_range: tuple = (1e-2, 1e3)
    families: tuple = STAGE1_FAMILIES
    degrees: tuple = (2, 3, 4, 5)
    gamma_range: tuple = (1e-3, 1e1)
    coef_range: tuple = (0.0, 2.0)
    tanh_scale_range: tuple = (1e-3, 1.0)
    tanh_offset_range: tuple = (-2.0, 0.0)
    smo_tol: float = 1e-3
    max_passes: int = 10
    scaler_mode: str = "minmax"
    seed: int = 0

    def __post_init__(self):
        if self.units_per_increment < 1:
            raise ValueError("units per increment must be at least 1")
        lo, hi = self.c_range
        if not 0 < lo < hi:
            raise ValueError("soft margin range must satisfy 0 < lo < hi")
        if not self.families or any(f not in ("linear",) + STAGE1_FAMILIES
                                    for f in self.families):
            raise ValueError("unknown kernel family in families")
        if not self.degrees or min(self.degrees) < 2:
            raise ValueError("polynomial degrees must be at least 2")
        if self.scaler_mode not in SCALER_MODES:
            raise ValueError(f"unknown scaler mode {self.scaler_mode!r}")
        if self.smo_tol <= 0:
            raise ValueError("SMO tolerance must be positive")
        if self.max_passes < 1:
            raise ValueError("SMO passes must be at least 1")
        for name in ("split_ratios", "c_range", "families", "degrees",
                     "gamma_range", "coef_range", "tanh_scale_range",
                     "tanh_offset_range"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        object.__setattr__(self, "seed", resolve_seed(self.seed))

    def to_dict(self):
        out = asdict(self)
        for name in ("split_ratios", "c_range", "families", "degrees",
                     "gamma_range", "coef_range", "tanh_scale_range",
                     "tanh_offset_range"):
            out[name] = list(out[name])
        return out

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        for name in ("stage1_ga", "stage2_ga"):
            if name in data and not isinstance(data[name], GaConfig):
                data[name] = GaConfig.from_dict(data[name])
        return cls(**data)

#=============================================================================
# Stage 1

def stage1_genes(cfg):
    """Gene layout of a stage-1 chromosome:
    (family, degree, gamma, coef, tanh scale, tanh offset, C)."""

    return [
        CategoricalGene(cfg.families),
        CategoricalGene(cfg.degrees),
        RealGene(*cfg.gamma_range, log=True),
        RealGene(*cfg.coef_range),
        RealGene(*cfg.tanh_scale_range, log=True),
        RealGene(*cfg.tanh_offset_range),
        RealGene(*cfg.c_range, log=True),
    ]

#-----------------------------------------------------------------------------

def decode_kernel(genes):
    """Returns the (KernelSpec, C) a stage-1 chromosome stands for.

    Genes irrelevant to the chosen family are ignored.
    """

    family, degree, gamma, coef, scale, offset, c = genes
    if family == "quadratic":
        kernel = KernelSpec.quadratic(coef)
    elif family == "polynomial":
        kernel = KernelSpec.polynomial(degree, coef)
    elif family == "rbf":
        kernel = KernelSpec.rbf(gamma)
    elif family == "tanh":
        kernel = KernelSpec.tanh(scale, offset)
    else:
        kernel = KernelSpec.linear()
    return kernel, float(c)

#-----------------------------------------------------------------------------

class Stage1Result(NamedTuple):
    """Best binary model per class pair plus the unit's scaler."""

    models: tuple
    scaler: object
    fitness: tuple
    histories: tuple

#-----------------------------------------------------------------------------

def _pair_slice(dataset, neg, pos):
    part = dataset.select_classes((neg, pos))
    return part.features, np.where(part.labels == pos, 1.0, -1.0)

#-----------------------------------------------------------------------------

def train_pair(train, val1, pair, cfg, seed):
    """Runs the stage-1 GA for one class pair on scaled data.

    Positional arguments:
    train, val1 -- scaled Datasets
    pair -- (neg_class, pos_class)
    cfg -- IlugaConfig
    seed -- GA seed

    Returns:
    (best BinarySvmModel, its Val1 accuracy, GA history)
    """

    neg, pos = pair
    X, y = _pair_slice(train, neg, pos)
    Xv, yv = _pair_slice(val1, neg, pos)
    if not (np.any(yv > 0) and np.any(yv < 0)):
        raise ValueError(f"Val1 holds no samples of one class of pair {pair}")
    truth = np.where(yv > 0, pos, neg)
    best, best_score = None, WORST_FITNESS

    # the cache calls this once per gene tuple in evaluation order, so the
    # first strict improvement is the chromosome run_ga reports as best
    def fitness(chromosome):
        nonlocal best, best_score
        kernel, c = decode_kernel(chromosome.genes)
        try:
            model = train_smo(X, y, kernel, c, tol=cfg.smo_tol,
                              max_passes=cfg.max_passes, pair=pair)
        except ValueError:
            return WORST_FITNESS
        score = WORST_FITNESS
        if model.converged:
            score = float(np.mean(predict_many(model, Xv) == truth))
        if best is None or score > best_score:
            best, best_score = model, score
        return score

    result = run_ga(cfg.stage1_ga.with_seed(seed), stage1_genes(cfg),
                    memoize_fitness(fitness))
    if best is None:
        raise ValueError(f"no trainable SVM found for pair {pair}")
    if result.best.fitness == WORST_FITNESS:
        logger.warning("pair %s: no candidate converged; keeping %s, C=%g",
                       pair, best.kernel, best.c)
    logger.debug("pair %s: %s C=%.4g val1 accuracy %.4f", pair, best.kernel,
                 best.c, result.best.fitness)
    return best, result.best.fitness, result.history

#-----------------------------------------------------------------------------

def train_unit_stage1(split, cfg, scaler=None, seed=None):
    """Stage 1: GA-optimized binary SVMs for every class pair of a split.

    Positional arguments:
    split -- TriSplit of one increment
    cfg -- IlugaConfig

    Keyword arguments:
    scaler -- Scaler for the unit (default: fitted on the whole split with
        cfg.scaler_mode)
    seed -- base seed of the per-pair GA runs (default cfg.seed)

    Returns:
    Stage1Result with one model per unordered class pair, in sorted order
    """

    classes = sorted(set(split.train.classes) | set(split.val1.classes)
                     | set(split.val2.classes))
    if len(classes) < 2:
        raise ValueError("an increment needs at least two classes")
    if scaler is None:
        scaler = fit_scaler(Dataset.concat(split), cfg.scaler_mode)
    seed = cfg.seed if seed is None else seed
    train = split.train.with_features(scaler.transform(split.train.features))
    val1 = split.val1.with_features(scaler.transform(split.val1.features))

    models, scores, histories = [], [], []
    for p, pair in enumerate(combinations(classes, 2)):
        model, score, history = train_pair(train, val1, pair, cfg,
                                           derive_seed(seed, p))
        models.append(model)
        scores.append(score)
        histories.append(history)
    return Stage1Result(tuple(models), scaler, tuple(scores),
                        tuple(histories))

#=============================================================================
# Stage 2

def weight_fitness(prior, unit, val2):
    """Builds the stage-2 fitness function.

    Positional arguments:
    prior -- Ensemble of earlier units (weights frozen)
    unit -- candidate MulticlassUnit (its own weights are ignored)
    val2 -- raw (unscaled) validation Dataset

    Returns:
    function mapping a chromosome (flat neg/pos weights in classifier order)
        to the accuracy on val2 of vote() over prior plus the reweighted unit
    """

    known = tuple(sorted(set(prior.known_classes) | set(unit.classes)))
    pv = potential_votes(add_unit(prior, unit))
    divisor = np.array([pv[c] for c in known], dtype=np.float64)
    X, y = val2.features, val2.labels
    base = raw_scores(prior, X, known) if prior.units else np.zeros(
        (len(val2), len(known)))
    decisions = unit_decisions(unit, X)
    pairs = [wc.pair for wc in unit.classifiers]
    labels = np.asarray(known)

    def fitness(chromosome):
        scores = (base + tally(decisions, pairs, chromosome.genes, known)) \
            / divisor
        return float(np.mean(labels[argmax_lowest(scores)] == y))

    return fitness

#-----------------------------------------------------------------------------

def train_unit_stage2(prior, stage1, split, cfg, seed=None):
    """Stage 2: GA-optimized decision weights for a stage-1 unit.

    Positional arguments:
    prior -- Ensemble the unit will be appended to
    stage1 -- Stage1Result
    split -- TriSplit; only Val2 is used
    cfg -- IlugaConfig

    Keyword arguments:
    seed -- GA seed (default cfg.seed)

    Returns:
    (MulticlassUnit with the best weights, best Val2 accuracy, GA history)
    """

    if len(split.val2) == 0:
        raise ValueError("Val2 must not be empty")
    unit = make_unit(stage1.models, stage1.scaler)
    n_genes = 2 * len(stage1.models)
    seed = cfg.seed if seed is None else seed
    result = run_ga(cfg.stage2_ga.with_seed(seed),
                    [RealGene(0.0, 1.0)] * n_genes,
                    weight_fitness(prior, unit, split.val2),
                    initial=[(1.0,) * n_genes])
    logger.debug("stage 2: val2 accuracy %.4f after %d evaluations",
                 result.best.fitness, result.evaluations)
    return (unit.with_weights(result.best.genes), result.best.fitness,
            result.history)

#=============================================================================

def learn_increment(ensemble, increment, cfg):
    """Trains m new units on one increment and returns the grown ensemble.

    Positional arguments:
    ensemble -- Ensemble to extend, or a path to a saved one
    increment -- Dataset of the new data only
    cfg -- IlugaConfig

    The units already in the ensemble are carried over unchanged. Unit k of
    the result uses seeds derived from (cfg.seed, k), so every unit sees its
    own Train/Val1/Val2 arrangement.
    """

    if isinstance(ensemble, (str, os.PathLike)):
        ensemble = load_model(ensemble)
    if not isinstance(ensemble, Ensemble):
        raise TypeError("expected an ILUGA Ensemble")
    if len(increment.classes) < 2:
        raise ValueError("an increment needs at least two classes")
    if ensemble.units and increment.dim != ensemble.dim:
        raise ValueError(f"increment has dim {increment.dim}, ensemble "
                         f"expects {ensemble.dim}")

    scaler = fit_scaler(increment, cfg.scaler_mode)
    for _ in range(cfg.units_per_increment):
        index = len(ensemble)
        unit_seed = derive_seed(cfg.seed, index)
        split = tri_split(increment, cfg.split_ratios,
                          seed=derive_seed(unit_seed, 0))
        stage1 = train_unit_stage1(split, cfg, scaler=scaler,
                                   seed=derive_seed(unit_seed, 1))
        unit, fitness, _ = train_unit_stage2(ensemble, stage1, split, cfg,
                                             seed=derive_seed(unit_seed, 2))
        ensemble = add_unit(ensemble, unit)
        logger.info("unit %d over classes %s: mean val1 %.3f, val2 %.3f",
                    index, list(unit.classes),
                    float(np.mean(stage1.fitness)), fitness)
    return ensemble

#-----------------------------------------------------------------------------

def classify(ensemble, x):
    """Returns the class predicted for a raw feature vector."""

    return vote(ensemble, x)[0]

#=============================================================================

class IlugaLearner:
    """A container for incrementally training and applying an ILUGA ensemble.

    This class carries the configuration and the current ensemble between
    increments, so the experiment harness can drive ILUGA and the Learn++
    baselines through the same learn/predict interface.
    """

    #-------------------------------------------------------------------------

    def __init__(self, cfg=None, ensemble=None):
        """ILUGA learner constructor.

        Keyword arguments:
        cfg -- IlugaConfig (default IlugaConfig())
        ensemble -- starting Ensemble (default empty)
        """

        self.cfg = IlugaConfig() if cfg is None else cfg
        self.ensemble = Ensemble() if ensemble is None else ensemble

    #-------------------------------------------------------------------------

    def learn(self, increment):
        """Trains on one increment and returns the updated ensemble."""

        self.ensemble = learn_increment(self.ensemble, increment, self.cfg)
        return self.ensemble

    #-------------------------------------------------------------------------

    def predict(self, X):
        """Returns the predicted class of each row of X."""

        return vote_batch(self.ensemble, X)[0]

    #-------------------------------------------------------------------------

    @property
    def model(self):
        return self.ensemble

    #-------------------------------------------------------------------------

    def save(self, path):
        """Writes the current ensemble to a model file."""

        save_model(self.ensemble, path)

    #-------------------------------------------------------------------------

    @classmethod
    def load(cls, path, cfg=None):
        """Returns a learner resuming from a saved ensemble."""

        return cls(cfg, load_model(path))
