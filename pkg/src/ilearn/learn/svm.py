"""Soft-margin binary SVM trained by sequential minimal optimization.

The solver works on the C-SVC dual

    min  1/2 a'Qa - e'a    s.t.  y'a = 0,  0 <= a_i <= C,   Q_ij = y_i y_j K_ij

and repeatedly moves the maximal KKT-violating pair (i, j):

    i = argmax { -y_t G_t : t in I_up },   j = argmin { -y_t G_t : t in I_low }

where G = Qa - e is the dual gradient. Training stops once the violation
gap m - M falls to the tolerance, at which point every training point
satisfies its KKT condition within that tolerance. Only coefficients above
SV_THRESHOLD are kept in the returned model.
"""

from ilearn.learn.kernels import cross_kernel, gram_matrix

from dataclasses import dataclass
import logging

import numpy as np

logger = logging.getLogger(__name__)

SV_THRESHOLD = 1e-8
# Curvature floor for non-PSD kernels
TAU = 1e-12

#=============================================================================

@dataclass(frozen=True, eq=False)
class BinarySvmModel:
    """A trained binary SVM for one class pair.

    Attributes:
    sv -- support vectors, shape (n_sv, dim)
    alpha_y -- signed dual coefficients alpha_i * y_i
    b -- bias
    kernel -- KernelSpec
    c -- soft margin
    pair -- (neg_class, pos_class) original class ids
    converged -- whether the solver met its tolerance within the budget
    iterations -- number of pair updates performed
    """

    sv: np.ndarray
    alpha_y: np.ndarray
    b: float
    kernel: object
    c: float
    pair: tuple
    converged: bool = True
    iterations: int = 0

    def __post_init__(self):
        sv = np.array(self.sv, dtype=np.float64, ndmin=2)
        alpha_y = np.array(self.alpha_y, dtype=np.float64).reshape(-1)
        if sv.shape[0] == 0:
            raise ValueError("a model needs at least one support vector")
        if sv.shape[0] != alpha_y.shape[0]:
            raise ValueError("support vectors and coefficients differ in "
                             "length")
        if self.c <= 0:
            raise ValueError("soft margin must be positive")
        sv.flags.writeable = False
        alpha_y.flags.writeable = False
        object.__setattr__(self, "sv", sv)
        object.__setattr__(self, "alpha_y", alpha_y)
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "pair", (int(self.pair[0]),
                                          int(self.pair[1])))

    @property
    def dim(self):
        return int(self.sv.shape[1])

#=============================================================================

def train_smo(X, y, kernel, c, tol=1e-3, max_passes=10, pair=(-1, 1)):
    """Trains a binary SVM with SMO.

    Positional arguments:
    X -- training vectors, shape (n, d)
    y -- labels in {-1, +1}
    kernel -- KernelSpec
    c -- positive soft margin

    Keyword arguments:
    tol -- KKT tolerance on the violation gap (default 1e-3)
    max_passes -- iteration budget in passes; one pass is max(n, 100) pair
        updates (default 10)
    pair -- (neg_class, pos_class) recorded in the model (default (-1, 1))

    Returns:
    BinarySvmModel; when the budget runs out first the model is still
        returned but flagged converged=False
    """

    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("training set must be a nonempty matrix")
    if X.shape[0] != y.shape[0]:
        raise ValueError("X and y differ in length")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be -1 or +1")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise ValueError("both classes must be present")
    c = float(c)
    if not c > 0:
        raise ValueError("soft margin must be positive")

    n = X.shape[0]
    K = gram_matrix(kernel, X)
    if not np.all(np.isfinite(K)):
        raise ValueError(f"kernel matrix of {kernel} is not finite")
    alpha = np.zeros(n)
    grad = -np.ones(n)
    budget = int(max_passes) * max(n, 100)

    converged = False
    iterations = 0
    while True:
        up = ((y > 0) & (alpha < c)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < c))
        score = -y * grad
        i = int(np.argmax(np.where(up, score, -np.inf)))
        j = int(np.argmin(np.where(low, score, np.inf)))
        gap = score[i] - score[j]
        if gap <= tol:
            converged = True
            break
        if iterations >= budget:
            break

        # Move along a_i += y_i t, a_j -= y_j t
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if eta <= TAU:
            eta = TAU
        t = gap / eta
        t = min(t, c - alpha[i] if y[i] > 0 else alpha[i])
        t = min(t, alpha[j] if y[j] > 0 else c - alpha[j])
        if t <= 0:
            break
        alpha[i] = min(max(alpha[i] + y[i] * t, 0.0), c)
        alpha[j] = min(max(alpha[j] - y[j] * t, 0.0), c)
        grad += y * t * (K[:, i] - K[:, j])
        iterations += 1

    score = -y * grad
    free = (alpha > SV_THRESHOLD) & (alpha < c - SV_THRESHOLD)
    if np.any(free):
        b = float(np.mean(score[free]))
    else:
        up = ((y > 0) & (alpha < c)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < c))
        b = float((np.max(score[up], initial=-np.inf)
                   + np.min(score[low], initial=np.inf)) / 2.0)
        if not np.isfinite(b):
            b = 0.0

    keep = alpha > SV_THRESHOLD
    if not np.any(keep):
        keep = alpha >= alpha.max()
    if not converged:
        logger.debug("SMO stopped after %d updates with gap %.3g (%s, C=%g)",
                     iterations, gap, kernel, c)

    return BinarySvmModel(sv=X[keep], alpha_y=(alpha * y)[keep], b=b,
                          kernel=kernel, c=c, pair=pair, converged=converged,
                          iterations=iterations)

#-----------------------------------------------------------------------------

def decision_values(model, X):
    """Returns sum_i alpha_y[i] K(sv[i], x) + b for each row of X."""

    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[1] != model.dim:
        raise ValueError(f"expected {model.dim} features, got {X.shape[1]}")
    return cross_kernel(model.kernel, X, model.sv) @ model.alpha_y + model.b

def decision_value(model, x):
    """Returns the pre-sign decision value of a single vector."""

    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("expected a single feature vector")
    return float(decision_values(model, x)[0])

#-----------------------------------------------------------------------------

def predict_many(model, X):
    """Returns the predicted class id for each row of X.

    A decision value of exactly 0 resolves to the positive class.
    """

    neg, pos = model.pair
    return np.where(decision_values(model, X) >= 0, pos, neg)

def predict(model, x):
    """Returns pair.pos if the decision value is >= 0, else pair.neg."""

    neg, pos = model.pair
    return pos if decision_value(model, x) >= 0 else neg

#-----------------------------------------------------------------------------

def dual_objective(model):
    """Returns the dual objective sum(alpha) - 1/2 a'Qa of a trained model.

    Pruned coefficients are zero, so the value over the support vectors
    equals the value over the full training set (up to the pruning floor).
    """

    K = gram_matrix(model.kernel, model.sv)
    ay = model.alpha_y
    return float(np.sum(np.abs(ay)) - 0.5 * ay @ K @ ay)
