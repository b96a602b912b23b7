"""Experiment runner for the incremental-learning protocols.

An experiment samples the increments and test set of a protocol from a data
pool, trains one learner increment by increment, and after every increment
records the per-class and generalized accuracy on the fixed test set. This
is repeated with seeds seed, seed+1, ... and the results are averaged into a
RunReport. Repetitions are independent and may run in worker processes.
"""

from ilearn.data.datasets import (OCR_PROTOCOL, WINE_PROTOCOL, DatasetError,
                                  IncrementSpec, load_csv, load_optdigits,
                                  load_wine, split_protocol)
from ilearn.learn.iluga import IlugaConfig, IlugaLearner
from ilearn.learn.learnpp import (PREDICTORS, LearnppConfig, LearnppLearner,
                                  LearnppState)
from ilearn.learn.modelio import load_model, save_model
from ilearn.learn.multiclass import vote_batch
from ilearn.util.randit import resolve_seed

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import repeat
from typing import NamedTuple, Optional
import json
import logging
import os
import time

import numpy as np

logger = logging.getLogger(__name__)

METHODS = ("iluga", "learnpp", "learnpp_mt")
PROTOCOLS = {"ocr": OCR_PROTOCOL, "wine": WINE_PROTOCOL}

DATA_ENV = "ILEARN_DATA_DIR"
OPTDIGITS_FILES = ("optdigits.tra", "optdigits.tes")
WINE_FILE = "wine.data"
UCI_URL = "https://archive.ics.uci.edu/ml/machine-learning-databases"

# Acceptance thresholds
GEN_THRESHOLDS = {"ocr": 0.88, "wine": 0.90}
NEW_CLASSES = {"ocr": (4, 9)}
NEW_CLASS_MIN = 0.75
FORGETTING_MAX = 0.15

DEFAULT_REPETITIONS = 5
FULL_REPETITIONS = 30

#=============================================================================

@dataclass
class ExperimentConfig:
    """Settings of one experiment.

    Attributes:
    dataset -- "ocr", "wine" or the path of a labelled CSV pool
    method -- "iluga", "learnpp" or "learnpp_mt"
    protocol -- IncrementSpec (default: the canonical protocol of ocr or
        wine; required for CSV pools)
    method_config -- overrides for IlugaConfig or LearnppConfig
    repetitions -- number of repetitions (default 5)
    seed -- seed of repetition 0; repetition r uses seed + r (default 0; -1
        chooses and records a random one)
    data_dir -- directory of the UCI files (default $ILEARN_DATA_DIR, then
        the working directory)
    jobs -- worker processes for repetitions (default 1)
    model_out -- where to save the final model of repetition 0 (optional)
    """

    dataset: str = "ocr"
    method: str = "iluga"
    protocol: Optional[IncrementSpec] = None
    method_config: dict = field(default_factory=dict)
    repetitions: int = DEFAULT_REPETITIONS
    seed: int = 0
    data_dir: Optional[str] = None
    jobs: int = 1
    model_out: Optional[str] = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one "
                             f"of {', '.join(METHODS)}")
        if int(self.repetitions) < 1:
            raise ValueError("repetitions must be at least 1")
        if int(self.jobs) < 1:
            raise ValueError("jobs must be at least 1")
        if isinstance(self.protocol, dict):
            self.protocol = IncrementSpec.from_dict(self.protocol)
        if self.protocol is None:
            if self.dataset not in PROTOCOLS:
                raise ValueError("a protocol is required for CSV datasets")
            self.protocol = PROTOCOLS[self.dataset]
        self.method_config = dict(self.method_config)
        self.repetitions = int(self.repetitions)
        self.jobs = int(self.jobs)
        self.seed = resolve_seed(self.seed)
        # Fail early on invalid method settings
        self.learner_config(self.seed)

    #-------------------------------------------------------------------------

    def learner_config(self, seed):
        """Returns the IlugaConfig or LearnppConfig of one repetition."""

        settings = dict(self.method_config)
        settings.setdefault("scaler_mode",
                            "optdigits" if self.dataset == "ocr" else "minmax")
        settings["seed"] = seed
        kind = IlugaConfig if self.method == "iluga" else LearnppConfig
        try:
            return kind.from_dict(settings)
        except TypeError as e:
            raise ValueError(f"invalid {self.method} settings: {e}") from e

    #-------------------------------------------------------------------------

    def to_dict(self):
        return {"dataset": self.dataset, "method": self.method,
                "protocol": self.protocol.to_dict(),
                "method_config": self.learner_config(self.seed).to_dict(),
                "repetitions": self.repetitions, "seed": self.seed,
                "jobs": self.jobs, "model_out": self.model_out}

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        # Repetition seeds always derive from the experiment seed
        data["method_config"] = {k: v for k, v in
                                 data.get("method_config", {}).items()
                                 if k != "seed"}
        return cls(**data)

    @classmethod
    def from_file(cls, path):
        """Reads an experiment configuration from a JSON file."""

        with open(path, "r") as f:
            try:
                data = json.load(f)
            except json.JSONDecodeError as e:
                raise ValueError(f"{path}: invalid JSON: {e}") from e
        if not isinstance(data, dict):
            raise ValueError(f"{path}: expected a JSON object")
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"{path}: unknown settings "
                             f"{', '.join(sorted(unknown))}")
        return cls.from_dict(data)

#=============================================================================

@dataclass
class RunReport:
    """Accuracy table of an experiment.

    Attributes:
    method, dataset -- what was run
    classes -- test-set classes, the table's columns
    increment_names -- one name per row
    per_class -- per increment, per class mean accuracy (None for classes
        not yet trained)
    gen -- per increment mean generalized accuracy
    std -- per increment standard deviation of the generalized accuracy
    runs -- per repetition raw results ({"seed", "gen", "per_class"})
    config -- echo of the ExperimentConfig
    timing -- wall-clock seconds ({"total", "repetitions"}), optional
    """

    method: str
    dataset: str
    classes: tuple
    increment_names: tuple
    per_class: list
    gen: list
    std: list
    runs: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    timing: Optional[dict] = None

    @property
    def final_gen(self):
        return self.gen[-1] if self.gen else None

    def to_dict(self, with_timing=False):
        out = {"method": self.method, "dataset": self.dataset,
               "classes": list(self.classes),
               "increments": [{"name": name,
                               "per_class": {str(c): v for c, v in
                                             zip(self.classes, row)},
                               "gen": g, "std": s}
                              for name, row, g, s in
                              zip(self.increment_names, self.per_class,
                                  self.gen, self.std)],
               "runs": self.runs, "config": self.config}
        if with_timing and self.timing is not None:
            out["timing"] = self.timing
        return out

    @classmethod
    def from_dict(cls, data):
        classes = tuple(int(c) for c in data["classes"])
        rows = data["increments"]
        return cls(method=data["method"], dataset=data["dataset"],
                   classes=classes,
                   increment_names=tuple(r["name"] for r in rows),
                   per_class=[[r["per_class"].get(str(c)) for c in classes]
                              for r in rows],
                   gen=[r["gen"] for r in rows],
                   std=[r["std"] for r in rows],
                   runs=list(data.get("runs", [])),
                   config=dict(data.get("config", {})),
                   timing=data.get("timing"))

#-----------------------------------------------------------------------------

class Check(NamedTuple):
    """Outcome of one acceptance check."""

    name: str
    passed: bool
    detail: str

#=============================================================================
# Data

def data_directory(data_dir=None):
    """Returns the data directory: the argument, then $ILEARN_DATA_DIR, then
    the working directory."""

    return data_dir or os.environ.get(DATA_ENV) or os.curdir

#-----------------------------------------------------------------------------

def _require(path, hint):
    if not os.path.isfile(path):
        raise DatasetError(f"missing data file {path}; {hint}")
    return path

#-----------------------------------------------------------------------------

def load_pool(cfg):
    """Loads the sample pool an experiment draws from."""

    root = data_directory(cfg.data_dir)
    if cfg.dataset == "ocr":
        hint = (f"download {' and '.join(OPTDIGITS_FILES)} from "
                f"{UCI_URL}/optdigits/ into {root} or set {DATA_ENV}")
        return load_optdigits(*(_require(os.path.join(root, name), hint)
                                for name in OPTDIGITS_FILES))
    if cfg.dataset == "wine":
        hint = (f"download {WINE_FILE} from {UCI_URL}/wine/ into {root} or "
                f"set {DATA_ENV}")
        return load_wine(_require(os.path.join(root, WINE_FILE), hint))
    return load_csv(_require(cfg.dataset, "expected a labelled CSV file"))

#=============================================================================
# Running

def make_learner(cfg, seed):
    """Returns a fresh learner for the configured method."""

    settings = cfg.learner_config(seed)
    if cfg.method == "iluga":
        return IlugaLearner(settings)
    return LearnppLearner(settings, variant=cfg.method)

#-----------------------------------------------------------------------------

def class_accuracies(predictions, labels, classes, trained):
    """Per-class accuracy on a test set; None for untrained classes."""

    row = []
    for c in classes:
        mask = labels == c
        if c not in trained or not np.any(mask):
            row.append(None)
        else:
            row.append(float(np.mean(predictions[mask] == c)))
    return row

#-----------------------------------------------------------------------------

def run_repetition(cfg, pool, r):
    """Runs repetition r of an experiment.

    Returns:
    (result dict with "seed", "gen" and "per_class", elapsed seconds, final
        model)
    """

    start = time.perf_counter()
    seed = cfg.seed + r
    split = split_protocol(pool, cfg.protocol, seed)
    test = split.test
    classes = test.classes
    learner = make_learner(cfg, seed)
    trained = set()
    gen, per_class = [], []
    for name, increment in zip(cfg.protocol.names, split.increments):
        if cfg.method != "iluga" and split.validation is not None:
            learner.learn(increment, validation=split.validation)
        else:
            learner.learn(increment)
        trained.update(increment.classes)
        predictions = learner.predict(test.features)
        gen.append(float(np.mean(predictions == test.labels)))
        per_class.append(class_accuracies(predictions, test.labels, classes,
                                          trained))
        logger.info("repetition %d (seed %d) %s: gen %.4f", r, seed, name,
                    gen[-1])
    elapsed = time.perf_counter() - start
    return ({"seed": seed, "gen": gen, "per_class": per_class}, elapsed,
            learner.model)

#-----------------------------------------------------------------------------

def _mean_cells(rows):
    cells = []
    for column in zip(*rows):
        if any(v is None for v in column):
            cells.append(None)
        else:
            cells.append(float(np.mean(column)))
    return cells

#-----------------------------------------------------------------------------

def aggregate(cfg, runs, classes, timing=None):
    """Averages repetition results into a RunReport."""

    names = tuple(cfg.protocol.names)
    gens = np.array([run["gen"] for run in runs], dtype=np.float64)
    per_class = [_mean_cells([run["per_class"][k] for run in runs])
                 for k in range(len(names))]
    return RunReport(method=cfg.method, dataset=cfg.dataset,
                     classes=tuple(int(c) for c in classes),
                     increment_names=names, per_class=per_class,
                     gen=[float(v) for v in gens.mean(axis=0)],
                     std=[float(v) for v in gens.std(axis=0)],
                     runs=runs, config=cfg.to_dict(), timing=timing)

#-----------------------------------------------------------------------------

def run_experiment(cfg, pool=None):
    """Runs every repetition of an experiment and returns its RunReport.

    Positional arguments:
    cfg -- ExperimentConfig

    Keyword arguments:
    pool -- Dataset to sample from (default: loaded per cfg.dataset)
    """

    start = time.perf_counter()
    pool = load_pool(cfg) if pool is None else pool
    reps = range(cfg.repetitions)
    if cfg.jobs > 1 and cfg.repetitions > 1:
        workers = min(cfg.jobs, cfg.repetitions)
        logger.info("running %d repetitions on %d processes",
                    cfg.repetitions, workers)
        with ProcessPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(run_repetition, repeat(cfg),
                                        repeat(pool), reps))
    else:
        results = [run_repetition(cfg, pool, r) for r in reps]

    runs = [result for result, _, _ in results]
    timing = {"total": time.perf_counter() - start,
              "repetitions": [seconds for _, seconds, _ in results]}
    if cfg.model_out:
        save_model(results[0][2], cfg.model_out)

    classes = sorted(cfg.protocol.test)
    report = aggregate(cfg, runs, classes, timing)
    logger.info("%s on %s: final gen %.4f (std %.4f) in %.1fs", cfg.method,
                cfg.dataset, report.gen[-1], report.std[-1], timing["total"])
    return report

#=============================================================================
# Acceptance

def acceptance_checks(report, protocol):
    """Checks a report against the reproduction thresholds of a protocol.

    Positional arguments:
    report -- RunReport
    protocol -- "ocr" or "wine"

    Returns:
    list of Check: the generalized-accuracy threshold for both protocols;
        on ocr also the accuracy of the classes introduced last and the
        bound on single-increment forgetting
    """

    if protocol not in GEN_THRESHOLDS:
        raise ValueError(f"no acceptance thresholds for {protocol!r}")
    checks = []
    threshold = GEN_THRESHOLDS[protocol]
    final = report.final_gen
    checks.append(Check("generalized accuracy",
                        final is not None and final >= threshold,
                        f"final gen {final:.4f}, required {threshold:.2f}"
                        if final is not None else "no increments"))

    for c in NEW_CLASSES.get(protocol, ()):
        cell = (report.per_class[-1][report.classes.index(c)]
                if c in report.classes and report.per_class else None)
        checks.append(Check(f"class {c} learned",
                            cell is not None and cell >= NEW_CLASS_MIN,
                            f"accuracy {cell:.4f}, required "
                            f"{NEW_CLASS_MIN:.2f}" if cell is not None
                            else "class never trained"))

    if protocol == "ocr":
        worst, where = 0.0, "none"
        for k in range(1, len(report.per_class)):
            for c, before, after in zip(report.classes,
                                        report.per_class[k - 1],
                                        report.per_class[k]):
                if before is not None and after is not None \
                        and before - after > worst:
                    worst = before - after
                    where = f"class {c} at {report.increment_names[k]}"
        checks.append(Check("no catastrophic forgetting",
                            worst <= FORGETTING_MAX,
                            f"largest drop {worst:.4f} ({where}), allowed "
                            f"{FORGETTING_MAX:.2f}"))
    return checks

#-----------------------------------------------------------------------------

def compare_methods(report_a, report_b):
    """Checks that report_a ends at least as accurate as report_b."""

    a, b = report_a.final_gen, report_b.final_gen
    return Check(f"{report_a.method} >= {report_b.method}", a >= b,
                 f"final gen {a:.4f} vs {b:.4f}")

#-----------------------------------------------------------------------------

def reproduce(name, method="iluga", repetitions=DEFAULT_REPETITIONS, seed=0,
              data_dir=None, jobs=1, full=False, method_config=None,
              pool=None):
    """Runs the canonical protocol of a dataset and checks the thresholds.

    Positional arguments:
    name -- "ocr" or "wine"

    Keyword arguments:
    method -- "iluga" (default), "learnpp" or "learnpp_mt"
    repetitions -- repetitions (default 5)
    seed -- seed of repetition 0 (default 0)
    data_dir -- data directory (default $ILEARN_DATA_DIR)
    jobs -- worker processes (default 1)
    full -- use the full repetition count of 30 (default False)
    method_config -- overrides for the learner configuration
    pool -- Dataset to sample from (default: loaded from data_dir)

    Returns:
    (RunReport, list of Check)
    """

    if name not in PROTOCOLS:
        raise ValueError(f"unknown protocol {name!r}; expected ocr or wine")
    cfg = ExperimentConfig(dataset=name, method=method,
                           method_config=method_config or {},
                           repetitions=FULL_REPETITIONS if full
                           else repetitions,
                           seed=seed, data_dir=data_dir, jobs=jobs)
    report = run_experiment(cfg, pool=pool)
    return report, acceptance_checks(report, name)

#=============================================================================
# Saved models

def model_predict(model, X, variant="learnpp_mt"):
    """Predicts with a loaded model of either kind.

    Positional arguments:
    model -- Ensemble or LearnppState
    X -- raw input matrix

    Keyword arguments:
    variant -- Learn++ combination rule for LearnppState models,
        "learnpp" or "learnpp_mt" (default "learnpp_mt")
    """

    if isinstance(model, LearnppState):
        if variant not in PREDICTORS:
            raise ValueError(f"unknown Learn++ variant {variant!r}")
        return PREDICTORS[variant](model, X)
    return vote_batch(model, X)[0]

#-----------------------------------------------------------------------------

def evaluate_model(model, test, variant="learnpp_mt"):
    """Returns (generalized accuracy, class -> accuracy) of a model on a
    labelled Dataset."""

    if len(test) == 0:
        raise ValueError("test set must not be empty")
    predictions = model_predict(model, test.features, variant)
    per_class = {int(c): float(np.mean(predictions[test.labels == c] == c))
                 for c in test.classes}
    return float(np.mean(predictions == test.labels)), per_class

#-----------------------------------------------------------------------------

def resume_training(model_path, increment, model_out, cfg=None,
                    variant="learnpp_mt"):
    """Trains a saved model on one more increment and saves the result.

    Positional arguments:
    model_path -- saved Ensemble or LearnppState
    increment -- Dataset of the new data only
    model_out -- path of the updated model

    Keyword arguments:
    cfg -- IlugaConfig or LearnppConfig matching the model kind (default:
        the defaults of that kind)
    variant -- Learn++ variant when the model is a LearnppState

    Returns:
    the updated model
    """

    model = load_model(model_path)
    if isinstance(model, LearnppState):
        if cfg is not None and not isinstance(cfg, LearnppConfig):
            raise ValueError("a Learn++ model needs a Learn++ configuration")
        learner = LearnppLearner(cfg, variant=variant, state=model)
    else:
        if cfg is not None and not isinstance(cfg, IlugaConfig):
            raise ValueError("an ILUGA model needs an ILUGA configuration")
        learner = IlugaLearner(cfg, model)
    learner.learn(increment)
    save_model(learner.model, model_out)
    return learner.model
