"""Binary cross entropy over independent per-instrument predictions."""

import numpy as np

CLAMP_EPS = 1e-7


def bce_loss(predictions, targets):
    """Mean binary cross entropy and its gradient w.r.t. the predictions.

    Predictions are clamped to ``[eps, 1 - eps]`` before the logs so that
    saturated sigmoids cannot produce infinities. Works on a single ``[11]``
    clip or a ``[batch, 11]`` stack; the mean runs over all elements, so the
    batched call equals the average of per-clip losses and the returned
    gradient is already the batch-mean gradient.

    :returns: ``(loss, grad_predictions)``
    """
    predictions = np.asarray(predictions)
    targets = np.asarray(targets)
    if predictions.shape != targets.shape:
        raise ValueError(
            f"prediction shape {predictions.shape} != target shape {targets.shape}"
        )
    if predictions.size == 0:
        raise ValueError("empty prediction tensor")
    if not np.isin(targets, (0, 1)).all():
        raise ValueError("targets must be binary 0/1")

    p = np.clip(predictions, CLAMP_EPS, 1.0 - CLAMP_EPS)
    y = targets.astype(p.dtype)
    n = p.size
    loss = -(y * np.log(p) + (1.0 - y) * np.log1p(-p)).sum() / n
    grad = (-(y / p) + (1.0 - y) / (1.0 - p)) / n
    return loss, grad.astype(predictions.dtype, copy=False)
