"""Training objectives.  Each returns (loss, gradient w.r.t. predictions)."""

from __future__ import annotations

import numpy as np


def mse_loss(pred, target, mask=None):
    """Mean over the batch of squared L2 norms per sequence.

    loss = (1/B) * sum_i ||pred_i - target_i||^2, optionally restricted
    to positions where ``mask`` (broadcastable to pred's shape) is 1.
    """
    pred = np.asarray(pred)
    target = np.asarray(target)
    if pred.shape != target.shape:
        raise ValueError(f"prediction shape {pred.shape} != target shape {target.shape}")
    b = pred.shape[0]
    diff = pred - target
    if mask is not None:
        diff = diff * mask
    loss = float(np.sum(diff * diff) / b)
    grad = 2.0 * diff / b
    if mask is not None:
        grad = grad * mask  # masked entries carry no gradient
    return loss, grad


def bce_with_logits(logits, labels):
    """Mean binary cross-entropy on raw scores; labels in {0, 1}."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if logits.shape != labels.shape:
        raise ValueError(f"logit shape {logits.shape} != label shape {labels.shape}")
    n = logits.size
    # log(1 + exp(-|z|)) form avoids overflow for large |z|
    loss = float(np.mean(np.maximum(logits, 0) - logits * labels + np.log1p(np.exp(-np.abs(logits)))))
    probs = 1.0 / (1.0 + np.exp(-logits))
    grad = (probs - labels) / n
    return loss, grad
