"""Kernel functions and Gram matrices for the SVM.

A KernelSpec is a tagged kernel family plus exactly the hyperparameters that
family needs. The family and its hyperparameters are genes of the stage-1
genetic search, so specs are small immutable values that serialize to a
plain record.

Families:
    linear      x.y
    quadratic   (x.y + coef)^2
    polynomial  (x.y + coef)^degree
    rbf         exp(-gamma |x-y|^2)
    tanh        tanh(scale x.y + offset)   (not PSD in general)
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

FAMILIES = ("linear", "quadratic", "polynomial", "rbf", "tanh")

# Hyperparameters required by each family
_REQUIRED = {
    "linear": (),
    "quadratic": ("coef",),
    "polynomial": ("degree", "coef"),
    "rbf": ("gamma",),
    "tanh": ("scale", "offset"),
}
_HYPERPARAMETERS = ("degree", "gamma", "scale", "offset", "coef")

#=============================================================================

@dataclass(frozen=True)
class KernelSpec:
    """A kernel family with its hyperparameters.

    Attributes:
    family -- one of linear, quadratic, polynomial, rbf, tanh
    degree -- integer >= 2 (polynomial only)
    gamma -- positive width (rbf only)
    scale, offset -- slope and intercept (tanh only)
    coef -- nonnegative inhomogeneous term (quadratic and polynomial)

    A hyperparameter must be set if and only if the family uses it.
    """

    family: str
    degree: Optional[int] = None
    gamma: Optional[float] = None
    scale: Optional[float] = None
    offset: Optional[float] = None
    coef: Optional[float] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        required = _REQUIRED[self.family]
        for name in _HYPERPARAMETERS:
            value = getattr(self, name)
            if name in required and value is None:
                raise ValueError(f"{self.family} kernel requires {name}")
            if name not in required and value is not None:
                raise ValueError(f"{self.family} kernel does not take {name}")
        if self.degree is not None:
            if int(self.degree) != self.degree or self.degree < 2:
                raise ValueError("polynomial degree must be an integer >= 2")
            object.__setattr__(self, "degree", int(self.degree))
        for name in ("gamma", "scale", "offset", "coef"):
            value = getattr(self, name)
            if value is not None:
                value = float(value)
                if not np.isfinite(value):
                    raise ValueError(f"kernel {name} must be finite")
                object.__setattr__(self, name, value)
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError("rbf gamma must be positive")
        if self.coef is not None and self.coef < 0:
            raise ValueError("kernel coef must be nonnegative")

    #-------------------------------------------------------------------------

    @classmethod
    def linear(cls):
        return cls("linear")

    @classmethod
    def quadratic(cls, coef=1.0):
        return cls("quadratic", coef=coef)

    @classmethod
    def polynomial(cls, degree, coef=1.0):
        return cls("polynomial", degree=degree, coef=coef)

    @classmethod
    def rbf(cls, gamma):
        return cls("rbf", gamma=gamma)

    @classmethod
    def tanh(cls, scale, offset):
        return cls("tanh", scale=scale, offset=offset)

    #-------------------------------------------------------------------------

    @property
    def is_psd(self):
        """Whether every Gram matrix of this kernel is positive semidefinite."""

        return self.family != "tanh"

    def to_record(self):
        """Returns the tagged record written into model files."""

        record = {"family": self.family}
        for name in _REQUIRED[self.family]:
            record[name] = getattr(self, name)
        return record

    @classmethod
    def from_record(cls, record):
        record = dict(record)
        family = record.pop("family")
        return cls(family, **record)

    def __str__(self):
        params = ", ".join(f"{n}={getattr(self, n):.4g}"
                           for n in _REQUIRED[self.family])
        return f"{self.family}({params})"

#=============================================================================

def _as_matrix(X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise ValueError("expected a vector or a matrix of row vectors")
    return X

#-----------------------------------------------------------------------------

def cross_kernel(spec, A, B):
    """Returns the kernel matrix K[i,j] = k(A[i], B[j]).

    Positional arguments:
    spec -- KernelSpec
    A -- matrix of row vectors (n, d)
    B -- matrix of row vectors (m, d)
    """

    A = _as_matrix(A)
    B = _as_matrix(B)
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")

    with np.errstate(over="ignore", invalid="ignore"):
        return _evaluate(spec, A, B)

#-----------------------------------------------------------------------------

def _evaluate(spec, A, B):
    if spec.family == "rbf":
        sq = (np.sum(A**2, axis=1)[:, None] + np.sum(B**2, axis=1)[None, :]
              - 2.0 * (A @ B.T))
        return np.exp(-spec.gamma * np.maximum(sq, 0.0))

    dots = A @ B.T
    if spec.family == "linear":
        return dots
    if spec.family == "quadratic":
        return (dots + spec.coef) ** 2
    if spec.family == "polynomial":
        return (dots + spec.coef) ** spec.degree
    return np.tanh(spec.scale * dots + spec.offset)

#-----------------------------------------------------------------------------

def kernel_eval(spec, x, y):
    """Evaluates the kernel on two vectors of equal length."""

    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    if spec.family == "rbf":
        d = x - y
        return float(np.exp(-spec.gamma * np.dot(d, d)))
    return float(cross_kernel(spec, x, y)[0, 0])

#-----------------------------------------------------------------------------

def gram_matrix(spec, X):
    """Returns the symmetric Gram matrix of a set of row vectors.

    Only the upper triangle is computed; the lower triangle is its mirror,
    so the result is exactly symmetric.
    """

    X = _as_matrix(X)
    G = cross_kernel(spec, X, X)
    upper = np.triu(G)
    G = upper + np.triu(G, 1).T
    if spec.family == "rbf":
        np.fill_diagonal(G, 1.0)
    return G
