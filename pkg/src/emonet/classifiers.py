"""The two emotion classifiers: a small CNN and a PCA+LDA Gaussian baseline.

The seven emotion labels live here with their fixed index order; both
classifiers emit probability vectors over that order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn
from .linalg import jacobi_eigh
from .preprocess import Roi

LABELS: tuple[str, ...] = (
    "angry", "disgust", "scared", "happy", "sad", "surprised", "neutral")

LABEL_INDEX: dict[str, int] = {name: i for i, name in enumerate(LABELS)}

# above this dimension the pure-Python Jacobi sweep gets slow; hand the
# symmetric eigenproblem to LAPACK instead (same contract, same sign fix)
_JACOBI_MAX_DIM = 128


class EmptyClass(ValueError):
    pass


class ClassTooSmall(ValueError):
    pass


class DegenerateData(ValueError):
    pass


@dataclass(frozen=True)
class EmotionScores:
    """Probability 7-vector over the fixed label order."""
    probs: np.ndarray

    def __post_init__(self):
        if self.probs.shape != (len(LABELS),):
            raise ValueError(f"expected {len(LABELS)} probabilities, got {self.probs.shape}")

    @property
    def argmax(self) -> int:
        """Winning label index; ties break toward the lowest index."""
        return int(np.argmax(self.probs))

    @property
    def label(self) -> str:
        return LABELS[self.argmax]

    @classmethod
    def from_percentages(cls, pct: dict[str, float]) -> "EmotionScores":
        """Percentages are kept verbatim (no renormalization) so published
        score vectors round-trip exactly through the report formatter."""
        probs = np.array([pct[name] for name in LABELS], dtype=np.float64) / 100.0
        return cls(probs=probs)


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    mean_loss: float
    train_accuracy: float


# ---------------------------------------------------------------------------
# CNN classifier
# ---------------------------------------------------------------------------

def cnn_predict(model: nn.CnnModel, roi: Roi | np.ndarray) -> EmotionScores:
    """Softmax scores for one ROI; deterministic for a fixed model."""
    pixels = roi.pixels if isinstance(roi, Roi) else np.asarray(roi)
    return EmotionScores(probs=nn.model_forward(model, pixels))


def _batch_argmax(model: nn.CnnModel, x: np.ndarray, chunk: int = 256) -> np.ndarray:
    preds = []
    for start in range(0, len(x), chunk):
        xb = nn._as_batch(model, x[start:start + chunk].astype(np.float32))
        logits = nn._forward_batch(model, xb)
        preds.append(np.argmax(logits, axis=1))
    return np.concatenate(preds)


def cnn_train(x: np.ndarray, y: np.ndarray, epochs: int, lr: float = 0.1,
              seed: int = 0, batch_size: int = 32,
              layers: list[nn.LayerSpec] | None = None
              ) -> tuple[nn.CnnModel, list[EpochStats]]:
    """Train the emotion CNN with plain SGD; bit-deterministic per seed.

    x is (n, side, side) float32 in [0, 1]; y holds label indices. Every
    label class must be represented at least once.
    """
    x = np.asarray(x, dtype=np.float32)
    y = np.asarray(y, dtype=np.int64)
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    counts = np.bincount(y, minlength=len(LABELS))
    for i, name in enumerate(LABELS):
        if counts[i] == 0:
            raise EmptyClass(f"no samples for label {name!r}")
    model = nn.build_model(input_side=x.shape[1],
                           layers=layers or nn.emotion_layer_stack(), seed=seed)
    rng = np.random.Generator(np.random.PCG64(seed))
    history: list[EpochStats] = []
    for epoch in range(epochs):
        order = rng.permutation(len(x))
        losses = []
        for start in range(0, len(x), batch_size):
            idx = order[start:start + batch_size]
            losses.append(nn.model_backward_and_step(model, x[idx], y[idx], lr))
        acc = float(np.mean(_batch_argmax(model, x) == y))
        history.append(EpochStats(epoch=epoch, mean_loss=float(np.mean(losses)),
                                  train_accuracy=acc))
    return model, history


# ---------------------------------------------------------------------------
# PCA + LDA baseline
# ---------------------------------------------------------------------------

@dataclass
class LdaModel:
    """PCA projection plus shared-covariance Gaussian class model."""
    pca_mean: np.ndarray      # (p,)
    pca_basis: np.ndarray     # (p, d), orthonormal columns
    class_means: np.ndarray   # (K, d)
    covariance: np.ndarray    # (d, d), regularized SPD
    priors: np.ndarray        # (K,), sums to 1

    def project(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.pca_mean) @ self.pca_basis


def default_pca_dim(p: int, n_classes: int = len(LABELS)) -> int:
    return min(n_classes * 4, p)


def pca_fit(x: np.ndarray, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Mean and top-d orthonormal covariance eigenvectors, descending variance.

    Sign convention: the largest-magnitude component of each basis column
    is made positive, so the decomposition is fully deterministic.
    """
    x = np.asarray(x, dtype=np.float64)
    n, p = x.shape
    if n < 2:
        raise ValueError("need at least 2 samples")
    if not 1 <= d <= min(n - 1, p):
        raise ValueError(f"target dimension {d} outside [1, {min(n - 1, p)}]")
    mean = x.mean(axis=0)
    xc = x - mean
    cov = (xc.T @ xc) / (n - 1)
    if not np.any(cov):
        raise DegenerateData("data covariance is identically zero")
    if p <= _JACOBI_MAX_DIM:
        eigvals, eigvecs = jacobi_eigh(cov)
    else:
        eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals, kind="stable")[::-1][:d]
    basis = eigvecs[:, order]
    flips = np.sign(basis[np.argmax(np.abs(basis), axis=0), np.arange(d)])
    flips[flips == 0] = 1.0
    return mean, basis * flips


def lda_fit(z: np.ndarray, y: np.ndarray, lam: float | None = None,
            n_classes: int | None = None
            ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Class means, pooled within-class covariance (+lam*I) and priors.

    lam defaults to 1e-3 * trace(pooled)/d, enough to keep the shared
    covariance positive-definite on small samples.
    """
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n, d = z.shape
    k = n_classes if n_classes is not None else int(y.max()) + 1
    means = np.zeros((k, d))
    priors = np.zeros(k)
    scatter = np.zeros((d, d))
    for c in range(k):
        zc = z[y == c]
        if len(zc) < 2:
            raise ClassTooSmall(f"class {c} has {len(zc)} samples, need >= 2")
        means[c] = zc.mean(axis=0)
        priors[c] = len(zc) / n
        centered = zc - means[c]
        scatter += centered.T @ centered
    cov = scatter / (n - k)
    if lam is None:
        lam = 1e-3 * np.trace(cov) / d
    if lam <= 0:
        raise ValueError("lambda must be positive")
    cov = cov + lam * np.eye(d)
    return means, cov, priors


def lda_train(x: np.ndarray, y: np.ndarray, d: int | None = None,
              lam: float | None = None) -> LdaModel:
    """Fit the full PCA -> LDA stack on flat feature vectors."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 3:
        x = x.reshape(len(x), -1)
    y = np.asarray(y, dtype=np.int64)
    counts = np.bincount(y, minlength=len(LABELS))
    for i, name in enumerate(LABELS):
        if counts[i] == 0:
            raise EmptyClass(f"no samples for label {name!r}")
    p = x.shape[1]
    if d is None:
        d = default_pca_dim(p)
    mean, basis = pca_fit(x, d)
    z = (x - mean) @ basis
    class_means, cov, priors = lda_fit(z, y, lam=lam, n_classes=len(LABELS))
    return LdaModel(pca_mean=mean, pca_basis=basis, class_means=class_means,
                    covariance=cov, priors=priors)


def lda_posterior(model: LdaModel, z: np.ndarray) -> np.ndarray:
    """Bayes posterior over classes in the projected space, log-space stable.

    Pr(Y=k | z) = pi_k N(z; mu_k, Sigma) / sum_l pi_l N(z; mu_l, Sigma);
    the shared normalizing constant of the Gaussian cancels.
    """
    z = np.asarray(z, dtype=np.float64)
    diffs = z - model.class_means                      # (K, d)
    solved = np.linalg.solve(model.covariance, diffs.T).T
    mahal = np.einsum("kd,kd->k", diffs, solved)
    with np.errstate(divide="ignore"):
        log_post = np.log(model.priors) - 0.5 * mahal
    log_post -= log_post.max()
    post = np.exp(log_post)
    post /= post.sum()
    return post


def lda_predict(model: LdaModel, x: np.ndarray) -> EmotionScores:
    """Posterior scores for one flat (or square) grayscale sample."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    return EmotionScores(probs=lda_posterior(model, model.project(x)))


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def evaluate(model, x: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Accuracy and K x K confusion matrix (rows true, columns predicted)."""
    y = np.asarray(y, dtype=np.int64)
    if len(y) == 0:
        raise ValueError("dataset must be nonempty")
    if isinstance(model, nn.CnnModel):
        preds = _batch_argmax(model, np.asarray(x, dtype=np.float32))
    elif isinstance(model, LdaModel):
        flat = np.asarray(x, dtype=np.float64).reshape(len(y), -1)
        z = (flat - model.pca_mean) @ model.pca_basis
        preds = np.array([int(np.argmax(lda_posterior(model, zi))) for zi in z])
    else:
        raise TypeError(f"cannot evaluate model of type {type(model).__name__}")
    k = len(LABELS)
    confusion = np.zeros((k, k), dtype=np.int64)
    np.add.at(confusion, (y, preds), 1)
    accuracy = float(np.trace(confusion)) / len(y)
    return accuracy, confusion
