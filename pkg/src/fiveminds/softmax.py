"""Multinomial softmax classifier trained by full-batch gradient descent.

Shared by the event classifier and the belief-dynamics likelihood model.
Training is deterministic: zero initialization, full-batch updates, a fixed
learning rate, and a relative-loss stopping rule.  Inputs are standardized
with stored statistics so the fixed rate is well conditioned.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_L2 = 1e-3
DEFAULT_LR = 0.5
DEFAULT_MAX_EPOCHS = 4000
DEFAULT_REL_TOL = 1e-6


@dataclass
class SoftmaxModel:
    weights: np.ndarray            # (n_classes, n_features), standardized space
    bias: np.ndarray               # (n_classes,)
    feat_mean: np.ndarray          # (n_features,)
    feat_std: np.ndarray           # (n_features,), zeros replaced by 1
    n_classes: int
    l2: float = DEFAULT_L2
    n_epochs: int = 0
    final_loss: float = 0.0

    def standardize(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.feat_mean) / self.feat_std

    def logits(self, x: np.ndarray) -> np.ndarray:
        z = self.standardize(x)
        return z @ self.weights.T + self.bias

    def log_proba(self, x: np.ndarray) -> np.ndarray:
        return log_softmax(self.logits(x))

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(self.log_proba(x), axis=-1)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))


def ce_loss_and_grad(weights: np.ndarray, bias: np.ndarray, x: np.ndarray,
                     y: np.ndarray, sample_weight: np.ndarray | None = None,
                     l2: float = DEFAULT_L2):
    """Weighted cross-entropy with an L2 penalty on the weights (not the bias).

    Returns (loss, grad_weights, grad_bias).  Kept as a free function so the
    analytic gradients can be checked against finite differences.
    """
    n = x.shape[0]
    if sample_weight is None:
        sample_weight = np.ones(n)
    wsum = float(np.sum(sample_weight))
    logits = x @ weights.T + bias
    logp = log_softmax(logits)
    loss = -float(np.sum(sample_weight * logp[np.arange(n), y])) / wsum
    loss += 0.5 * l2 * float(np.sum(weights * weights))

    p = np.exp(logp)
    p[np.arange(n), y] -= 1.0
    p *= (sample_weight / wsum)[:, None]
    grad_w = p.T @ x + l2 * weights
    grad_b = p.sum(axis=0)
    return loss, grad_w, grad_b


def train_softmax(x: np.ndarray, y: np.ndarray, n_classes: int,
                  sample_weight: np.ndarray | None = None,
                  l2: float = DEFAULT_L2, lr: float = DEFAULT_LR,
                  max_epochs: int = DEFAULT_MAX_EPOCHS,
                  rel_tol: float = DEFAULT_REL_TOL,
                  seed: int = 0) -> SoftmaxModel:
    """Fit by plain gradient descent until the relative loss change < rel_tol.

    `seed` is accepted for interface stability; with zero init and full-batch
    updates the procedure consumes no randomness.
    """
    del seed
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=int)
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)
    xs = (x - mean) / std

    w = np.zeros((n_classes, x.shape[1]))
    b = np.zeros(n_classes)
    prev = np.inf
    loss = np.inf
    epoch = 0
    for epoch in range(1, max_epochs + 1):
        loss, gw, gb = ce_loss_and_grad(w, b, xs, y, sample_weight, l2)
        w -= lr * gw
        b -= lr * gb
        if np.isfinite(prev) and abs(prev - loss) <= rel_tol * max(abs(prev), 1e-12):
            break
        prev = loss
    return SoftmaxModel(weights=w, bias=b, feat_mean=mean, feat_std=std,
                        n_classes=n_classes, l2=l2, n_epochs=epoch,
                        final_loss=float(loss))


def dedupe_examples(x: np.ndarray, y: np.ndarray):
    """Collapse duplicate (row, label) pairs into weighted unique examples.

    The belief likelihood model sees hundreds of thousands of frames drawn
    from a few dozen distinct binary evidence vectors; training on counts is
    exactly equivalent and orders of magnitude faster.
    """
    stacked = np.column_stack([x, y])
    uniq, counts = np.unique(stacked, axis=0, return_counts=True)
    return uniq[:, :-1], uniq[:, -1].astype(int), counts.astype(float)
