"""One-vs-all linear max-margin classifier.

Each class gets an L2-regularized hinge-loss separator trained by dual
coordinate descent (the standard solver family for linear SVMs on dense
high-dimensional features).  The bias is carried as an augmented
constant feature, which is harmless at Fisher-vector dimensionality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLabels, DimensionMismatch

DEFAULT_C = 10.0


@dataclass(frozen=True)
class LinearModel:
    classes: tuple[str, ...]
    weights: np.ndarray  # (n_classes, n_features)
    biases: np.ndarray  # (n_classes,)
    c_param: float = DEFAULT_C

    @property
    def n_features(self) -> int:
        return self.weights.shape[1]


def _binary_dual_cd(x: np.ndarray, y: np.ndarray, c: float,
                    rng: np.random.Generator, tol: float,
                    max_passes: int) -> np.ndarray:
    """Dual coordinate descent for min 1/2 ||w||^2 + c * sum hinge.

    ``x`` already carries the bias column; ``y`` is +/-1.  Returns the
    augmented weight vector.  Deterministic given the generator state.
    """
    n = x.shape[0]
    alpha = np.zeros(n)
    w = np.zeros(x.shape[1])
    q_diag = np.einsum("ij,ij->i", x, x)
    for _ in range(max_passes):
        order = rng.permutation(n)
        pg_max = -np.inf
        pg_min = np.inf
        for i in order:
            if q_diag[i] == 0:
                continue
            g = y[i] * (x[i] @ w) - 1.0
            # Projected gradient respecting the box 0 <= alpha <= c.
            if alpha[i] == 0:
                pg = min(g, 0.0)
            elif alpha[i] == c:
                pg = max(g, 0.0)
            else:
                pg = g
            if pg != 0.0:
                old = alpha[i]
                alpha[i] = min(max(old - g / q_diag[i], 0.0), c)
                delta = alpha[i] - old
                if delta != 0.0:
                    w += (delta * y[i]) * x[i]
            pg_max = max(pg_max, pg)
            pg_min = min(pg_min, pg)
        if pg_max - pg_min < tol:
            break
    return w


def train(x: np.ndarray, y, c_param: float = DEFAULT_C, seed: int = 0,
          tol: float = 1e-4, max_passes: int = 1000) -> LinearModel:
    """Train one separator per class against the rest.

    Labels may be any strings/ints; classes are ordered by sorted label.
    Training is deterministic for a fixed seed.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionMismatch("x must be an (n, f) matrix")
    labels = [str(v) for v in y]
    if len(labels) != x.shape[0]:
        raise DimensionMismatch("label count does not match sample count")
    classes = tuple(sorted(set(labels)))
    if len(classes) < 2:
        raise DegenerateLabels("training needs at least two classes")

    xa = np.hstack([x, np.ones((x.shape[0], 1))])
    weights = np.empty((len(classes), x.shape[1]))
    biases = np.empty(len(classes))
    for ci, cls in enumerate(classes):
        sign = np.where(np.array(labels) == cls, 1.0, -1.0)
        rng = np.random.default_rng((seed, ci))
        w = _binary_dual_cd(xa, sign, c_param, rng, tol, max_passes)
        weights[ci] = w[:-1]
        biases[ci] = w[-1]
    return LinearModel(classes=classes, weights=weights, biases=biases,
                       c_param=c_param)


def decision_scores(model: LinearModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.n_features:
        raise DimensionMismatch(
            f"feature dim {x.shape[-1]} != model dim {model.n_features}"
        )
    return x @ model.weights.T + model.biases


def predict(model: LinearModel, x: np.ndarray) -> tuple[str, np.ndarray]:
    """Predicted label (first class wins ties) and the per-class scores."""
    scores = decision_scores(model, x)
    if scores.ndim != 1:
        raise DimensionMismatch("predict takes a single feature vector")
    return model.classes[int(np.argmax(scores))], scores


def predict_batch(model: LinearModel, x: np.ndarray) -> list[str]:
    scores = np.atleast_2d(decision_scores(model, x))
    return [model.classes[i] for i in np.argmax(scores, axis=1)]
