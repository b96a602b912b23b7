"""Datasets, incremental protocols, splits and feature scaling.

This submodule loads the UCI optdigits and wine files (and a generic labelled
CSV format), carves a pool of samples into the disjoint increments and test
set of an incremental-learning protocol, produces the stratified
Train/Val1/Val2 split used to train one ILUGA unit, and fits the feature
scalers that travel with every trained unit.

All containers are immutable once built: their arrays are flagged read-only
so they can be shared freely between workers.
"""

from ilearn.util.ilist import IndexPool
from ilearn.util.randit import RandomStream

from dataclasses import dataclass
from typing import NamedTuple, Optional
import csv
import logging
import math

import numpy as np

logger = logging.getLogger(__name__)

# Optdigits attributes are pixel counts in [0,16]
OPTDIGITS_DIM = 64
OPTDIGITS_MAX = 16
WINE_DIM = 13

SCALER_MODES = ("minmax", "optdigits")

#=============================================================================

class DatasetError(ValueError):
    """Raised for malformed data files and unsatisfiable sampling requests.

    Parse errors carry the offending file path and 1-based line number in
    the "path" and "line" attributes (None when not applicable).
    """

    def __init__(self, message, path=None, line=None):
        if line is not None:
            message = f"{path}: line {line}: {message}"
        super().__init__(message)
        self.path = path
        self.line = line

#=============================================================================

class Sample(NamedTuple):
    """A single labelled feature vector."""

    features: np.ndarray
    label: int

#-----------------------------------------------------------------------------

def _frozen(array):
    array = np.array(array)
    array.flags.writeable = False
    return array

#=============================================================================

@dataclass(frozen=True, eq=False)
class Dataset:
    """An immutable labelled sample matrix.

    Attributes:
    features -- float array of shape (n, dim)
    labels -- integer class ids of shape (n,)
    ids -- integer row ids of the samples within the pool they were drawn
        from (defaults to 0..n-1); used to check disjointness of increments
    dim -- feature dimensionality (taken from features unless the dataset
        is empty)
    """

    features: np.ndarray
    labels: np.ndarray
    ids: Optional[np.ndarray] = None
    dim: Optional[int] = None

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        features = np.asarray(self.features, dtype=np.float64)
        if features.size == 0:
            if self.dim is None:
                raise ValueError("empty dataset requires an explicit dim")
            features = features.reshape(0, int(self.dim))
        if features.ndim != 2:
            raise ValueError("features must be a 2-D array")
        dim = features.shape[1] if self.dim is None else int(self.dim)
        if dim <= 0:
            raise ValueError("dataset dimensionality must be positive")
        if features.shape[1] != dim:
            raise ValueError(f"feature vectors have length {features.shape[1]}"
                             f" but the dataset declares dim={dim}")
        if features.shape[0] != labels.shape[0]:
            raise ValueError("features and labels differ in length")
        if labels.size and labels.min() < 0:
            raise ValueError("class labels must be nonnegative")
        if self.ids is None:
            ids = np.arange(labels.shape[0], dtype=np.int64)
        else:
            ids = np.asarray(self.ids, dtype=np.int64).reshape(-1)
            if ids.shape != labels.shape:
                raise ValueError("ids and labels differ in length")

        object.__setattr__(self, "features", _frozen(features))
        object.__setattr__(self, "labels", _frozen(labels))
        object.__setattr__(self, "ids", _frozen(ids))
        object.__setattr__(self, "dim", dim)

    #-------------------------------------------------------------------------

    def __len__(self):
        return int(self.labels.shape[0])

    @property
    def classes(self):
        """Sorted tuple of the class ids actually present."""

        return tuple(int(c) for c in np.unique(self.labels))

    def samples(self):
        """Iterates over the dataset as Sample tuples."""

        for x, label in zip(self.features, self.labels):
            yield Sample(x, int(label))

    def class_counts(self):
        """Returns a dictionary of class id -> number of samples."""

        values, counts = np.unique(self.labels, return_counts=True)
        return {int(v): int(n) for v, n in zip(values, counts)}

    #-------------------------------------------------------------------------

    def subset(self, selector):
        """Returns a new dataset of the selected rows.

        Positional arguments:
        selector -- boolean mask or integer index array
        """

        selector = np.asarray(selector)
        if selector.dtype != bool:
            selector = selector.astype(np.int64)
        return Dataset(self.features[selector], self.labels[selector],
                       ids=self.ids[selector], dim=self.dim)

    def select_classes(self, classes):
        """Returns the rows whose label is in the given classes."""

        return self.subset(np.isin(self.labels, list(classes)))

    def with_features(self, features):
        """Returns a copy with replaced features (same labels and ids)."""

        return Dataset(features, self.labels, ids=self.ids, dim=self.dim)

    @classmethod
    def concat(cls, datasets):
        """Concatenates datasets of equal dimensionality in order."""

        datasets = list(datasets)
        if not datasets:
            raise ValueError("nothing to concatenate")
        dims = {d.dim for d in datasets}
        if len(dims) != 1:
            raise ValueError("cannot concatenate datasets of different dim")
        return cls(np.concatenate([d.features for d in datasets]),
                   np.concatenate([d.labels for d in datasets]),
                   ids=np.concatenate([d.ids for d in datasets]),
                   dim=dims.pop())

#=============================================================================
# Loaders

def _rows(path):
    """Yields (line number, fields) for every nonblank line of a CSV file."""

    with open(path, newline="") as f:
        for lineno, fields in enumerate(csv.reader(f), start=1):
            if not fields or all(not s.strip() for s in fields):
                continue
            yield lineno, [s.strip() for s in fields]

#-----------------------------------------------------------------------------

def load_optdigits(*paths):
    """Loads one or more UCI optdigits files into a single dataset.

    Positional arguments:
    paths -- file paths, concatenated in the given order (pass the training
        and the test file to build the merged 5620-sample pool)

    Every line must hold 64 integer features in [0,16] followed by the digit
    label in 0..9.
    """

    if not paths:
        raise ValueError("at least one optdigits file is required")

    features = []
    labels = []
    for path in paths:
        for lineno, fields in _rows(path):
            if len(fields) != OPTDIGITS_DIM + 1:
                raise DatasetError(f"expected {OPTDIGITS_DIM + 1} fields, "
                                   f"got {len(fields)}", path, lineno)
            try:
                values = [int(s) for s in fields]
            except ValueError:
                raise DatasetError("non-integer field", path, lineno)
            row, label = values[:-1], values[-1]
            if min(row) < 0 or max(row) > OPTDIGITS_MAX:
                raise DatasetError(f"feature outside [0,{OPTDIGITS_MAX}]",
                                   path, lineno)
            if not 0 <= label <= 9:
                raise DatasetError(f"label {label} outside 0..9", path,
                                   lineno)
            features.append(row)
            labels.append(label)

    if not labels:
        raise DatasetError("no samples")
    logger.info("loaded %d optdigits samples from %d file(s)", len(labels),
                len(paths))
    return Dataset(features, labels, dim=OPTDIGITS_DIM)

#-----------------------------------------------------------------------------

def load_wine(path):
    """Loads the UCI wine file, remapping class ids 1..3 to labels 0..2."""

    features = []
    labels = []
    for lineno, fields in _rows(path):
        if len(fields) != WINE_DIM + 1:
            raise DatasetError(f"expected {WINE_DIM + 1} fields, got "
                               f"{len(fields)}", path, lineno)
        try:
            label = int(fields[0])
            row = [float(s) for s in fields[1:]]
        except ValueError:
            raise DatasetError("unparseable field", path, lineno)
        if label not in (1, 2, 3):
            raise DatasetError(f"unknown class id {label}", path, lineno)
        if not all(math.isfinite(v) for v in row):
            raise DatasetError("non-finite attribute", path, lineno)
        features.append(row)
        labels.append(label - 1)

    if not labels:
        raise DatasetError("no samples")
    logger.info("loaded %d wine samples from %s", len(labels), path)
    return Dataset(features, labels, dim=WINE_DIM)

#-----------------------------------------------------------------------------

def load_csv(path):
    """Loads a generic labelled CSV with header label,f0,...,f{d-1}."""

    rows = _rows(path)
    try:
        lineno, header = next(rows)
    except StopIteration:
        raise DatasetError("no samples")
    dim = len(header) - 1
    expected = ["label"] + [f"f{i}" for i in range(dim)]
    if dim <= 0 or header != expected:
        raise DatasetError("header must read label,f0,...,f{d-1}", path,
                           lineno)

    features = []
    labels = []
    for lineno, fields in rows:
        if len(fields) != dim + 1:
            raise DatasetError(f"expected {dim + 1} fields, got "
                               f"{len(fields)}", path, lineno)
        try:
            label = int(fields[0])
            row = [float(s) for s in fields[1:]]
        except ValueError:
            raise DatasetError("unparseable field", path, lineno)
        if label < 0:
            raise DatasetError("negative class label", path, lineno)
        features.append(row)
        labels.append(label)

    if not labels:
        raise DatasetError("no samples")
    return Dataset(features, labels, dim=dim)

#-----------------------------------------------------------------------------

def save_csv(dataset, path):
    """Writes a dataset as CSV with header label,f0,...,f{d-1}.

    Values are written in their shortest round-trip form so that saving a
    loaded file reproduces it byte for byte.
    """

    with open(path, "w", newline="") as f:
        f.write(",".join(["label"] + [f"f{i}" for i in range(dataset.dim)]))
        f.write("\n")
        for x, label in zip(dataset.features, dataset.labels):
            f.write(",".join([str(int(label))]
                             + [repr(float(v)) for v in x]))
            f.write("\n")

#=============================================================================
# Incremental protocols

def _count_table(counts):
    table = {}
    for c, n in dict(counts).items():
        c = int(c)
        n = int(n)
        if c < 0:
            raise ValueError("class ids must be nonnegative")
        if n < 0:
            raise ValueError(f"count for class {c} must be nonnegative")
        if n > 0:
            table[c] = n
    return table

#-----------------------------------------------------------------------------

@dataclass(frozen=True)
class IncrementSpec:
    """Per-class sample counts for each increment and the held-out sets.

    Attributes:
    increments -- tuple of class -> count tables, one per training increment
    test -- class -> count table of the test set
    validation -- optional class -> count table of a validation set
    names -- display names of the increments (default DS1, DS2, ...)
    """

    increments: tuple
    test: dict
    validation: Optional[dict] = None
    names: tuple = ()

    def __post_init__(self):
        increments = tuple(_count_table(t) for t in self.increments)
        if not increments:
            raise ValueError("at least one increment is required")
        names = tuple(self.names) or tuple(f"DS{k+1}"
                                           for k in range(len(increments)))
        if len(names) != len(increments):
            raise ValueError("one name per increment is required")
        object.__setattr__(self, "increments", increments)
        object.__setattr__(self, "test", _count_table(self.test))
        if self.validation is not None:
            object.__setattr__(self, "validation",
                               _count_table(self.validation))
        object.__setattr__(self, "names", names)

    @property
    def classes(self):
        """Sorted tuple of every class named by the spec."""

        tables = list(self.increments) + [self.test, self.validation or {}]
        return tuple(sorted(set().union(*tables)))

    def to_dict(self):
        def dump(t):
            return {str(c): n for c, n in sorted(t.items())}
        out = {"increments": [dump(t) for t in self.increments],
               "test": dump(self.test), "names": list(self.names)}
        if self.validation is not None:
            out["validation"] = dump(self.validation)
        return out

    @classmethod
    def from_dict(cls, data):
        return cls(increments=tuple(data["increments"]), test=data["test"],
                   validation=data.get("validation"),
                   names=tuple(data.get("names", ())))

#-----------------------------------------------------------------------------

# OCR distribution (digits 0-9); classes 4 and 9 appear only in DS3
OCR_PROTOCOL = IncrementSpec(
    increments=(
        {0: 250, 1: 250, 2: 250, 5: 250, 6: 250, 7: 250},
        {0: 150, 2: 150, 3: 250, 5: 150, 7: 150, 8: 250},
        {1: 150, 3: 150, 4: 400, 6: 150, 8: 150, 9: 400},
    ),
    test={0: 110, 1: 114, 2: 111, 3: 114, 4: 113, 5: 111, 6: 111, 7: 113,
          8: 110, 9: 112},
)

# Wine distribution with cultivars remapped to 0..2
WINE_PROTOCOL = IncrementSpec(
    increments=({0: 26, 1: 31}, {0: 13, 1: 16, 2: 32}),
    test={0: 13, 1: 16, 2: 11},
    validation={0: 7, 1: 8, 2: 5},
)

#-----------------------------------------------------------------------------

class ProtocolSplit(NamedTuple):
    """The disjoint sets carved from a pool by split_protocol()."""

    increments: list
    test: Dataset
    validation: Optional[Dataset]

#-----------------------------------------------------------------------------

def split_protocol(pool, spec, seed):
    """Samples increments, test and validation sets from a pool.

    Positional arguments:
    pool -- Dataset to sample from
    spec -- IncrementSpec giving the per-class counts
    seed -- nonnegative integer seed

    Sampling is without replacement across all returned sets, and the
    per-class counts of every set match the spec exactly. Row ids of the
    returned datasets index into the pool.
    """

    tables = list(spec.increments) + [spec.test]
    if spec.validation is not None:
        tables.append(spec.validation)

    stream = RandomStream(seed)
    available = pool.class_counts()
    drawn = [[] for _ in tables]
    for c in spec.classes:
        needed = sum(t.get(c, 0) for t in tables)
        have = available.get(c, 0)
        if needed > have:
            raise DatasetError(f"class {c} needs {needed} samples but the "
                               f"pool has {have}")
        candidates = IndexPool(np.flatnonzero(pool.labels == c))
        for k, t in enumerate(tables):
            drawn[k].extend(candidates.draw(t.get(c, 0), stream))

    sets = [pool.subset(np.array(sorted(rows), dtype=np.int64))
            for rows in drawn]
    n_inc = len(spec.increments)
    validation = sets[n_inc + 1] if spec.validation is not None else None
    return ProtocolSplit(sets[:n_inc], sets[n_inc], validation)

#-----------------------------------------------------------------------------

def make_increments(pool, spec, seed):
    """Returns (increments, test) sampled from a pool per an IncrementSpec."""

    split = split_protocol(pool, spec, seed)
    return split.increments, split.test

#=============================================================================
# Train / Val1 / Val2

class TriSplit(NamedTuple):
    """The three disjoint parts an increment is divided into."""

    train: Dataset
    val1: Dataset
    val2: Dataset

#-----------------------------------------------------------------------------

def _validate_ratios(ratios):
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3:
        raise ValueError("split ratios must have three entries")
    if min(ratios) <= 0:
        raise ValueError("split ratios must be positive")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError("split ratios must sum to 1")
    return ratios

#-----------------------------------------------------------------------------

def part_sizes(n, ratios):
    """Splits n items into three parts by largest remainder.

    Each part receives at least one item (n >= 3 is required); leftover
    items go to the parts with the largest fractional targets, earlier parts
    first on ties.
    """

    ratios = _validate_ratios(ratios)
    n = int(n)
    if n < 3:
        raise ValueError("at least 3 items are needed for a three-way split")
    targets = [r * n for r in ratios]
    sizes = [int(math.floor(t)) for t in targets]
    order = sorted(range(3), key=lambda k: (-(targets[k] - sizes[k]), k))
    for k in order[:n - sum(sizes)]:
        sizes[k] += 1
    for k in range(3):
        if sizes[k] == 0:
            donor = max(range(3), key=lambda j: (sizes[j], -j))
            sizes[donor] -= 1
            sizes[k] += 1
    return tuple(sizes)

#-----------------------------------------------------------------------------

def tri_split(increment, ratios=(0.6, 0.2, 0.2), seed=-1):
    """Stratified random split of an increment into Train, Val1 and Val2.

    Positional arguments:
    increment -- Dataset to split

    Keyword arguments:
    ratios -- three positive fractions summing to 1 (default (0.6,0.2,0.2))
    seed -- random seed (default -1 for random); a new seed gives a new
        arrangement of the same increment

    Every class of the increment appears in all three parts.
    """

    ratios = _validate_ratios(ratios)
    counts = increment.class_counts()
    for c, n in counts.items():
        if n < 3:
            raise DatasetError(f"class {c} has {n} samples; at least 3 are "
                               "needed to stratify into three parts")

    stream = RandomStream(seed)
    parts = [[], [], []]
    for c in sorted(counts):
        rows = np.flatnonzero(increment.labels == c)
        rows = rows[stream.permutation(rows.shape[0])]
        sizes = part_sizes(rows.shape[0], ratios)
        start = 0
        for k, size in enumerate(sizes):
            parts[k].extend(rows[start:start + size].tolist())
            start += size

    train, val1, val2 = (increment.subset(np.array(sorted(p), dtype=np.int64))
                         for p in parts)
    return TriSplit(train, val1, val2)

#=============================================================================
# Feature scaling

@dataclass(frozen=True, eq=False)
class Scaler:
    """Affine feature map x -> (x - lower) / span, with zero-span features
    mapped to 0.

    Attributes:
    mode -- "optdigits" (fixed x/16) or "minmax" (fitted per increment)
    lower -- per-feature offsets
    span -- per-feature ranges
    """

    mode: str
    lower: np.ndarray
    span: np.ndarray

    def __post_init__(self):
        if self.mode not in SCALER_MODES:
            raise ValueError(f"unknown scaler mode {self.mode!r}")
        lower = np.asarray(self.lower, dtype=np.float64).reshape(-1)
        span = np.asarray(self.span, dtype=np.float64).reshape(-1)
        if lower.shape != span.shape:
            raise ValueError("scaler lower and span differ in length")
        object.__setattr__(self, "lower", _frozen(lower))
        object.__setattr__(self, "span", _frozen(span))

    @property
    def dim(self):
        return int(self.lower.shape[0])

    def transform(self, X):
        """Scales a vector or a matrix of row vectors."""

        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.dim:
            raise ValueError(f"expected {self.dim} features, got "
                             f"{X.shape[-1]}")
        safe = np.where(self.span > 0, self.span, 1.0)
        return np.where(self.span > 0, (X - self.lower) / safe, 0.0)

    def to_record(self):
        return {"mode": self.mode, "lower": self.lower.tolist(),
                "span": self.span.tolist()}

    @classmethod
    def from_record(cls, record):
        return cls(record["mode"], record["lower"], record["span"])

#-----------------------------------------------------------------------------

def fit_scaler(increment, mode="minmax"):
    """Builds the scaler for one increment.

    Positional arguments:
    increment -- Dataset the scaler is fitted on

    Keyword arguments:
    mode -- "minmax" (default; per-feature min-max over this increment
        only) or "optdigits" (fixed map x/16, nothing fitted)

    A constant feature has zero span and is mapped to 0.
    """

    if mode == "optdigits":
        return Scaler(mode, np.zeros(increment.dim),
                      np.full(increment.dim, float(OPTDIGITS_MAX)))
    if mode == "minmax":
        if len(increment) == 0:
            raise ValueError("cannot fit a min-max scaler on no samples")
        lower = increment.features.min(axis=0)
        upper = increment.features.max(axis=0)
        return Scaler(mode, lower, upper - lower)
    raise ValueError(f"unknown scaler mode {mode!r}")

#-----------------------------------------------------------------------------

def apply_scaler(scaler, dataset):
    """Returns a copy of the dataset with scaled features."""

    return dataset.with_features(scaler.transform(dataset.features))
