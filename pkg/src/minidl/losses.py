"""Loss functions.

Every loss reports a scalar averaged value and the gradient needed to
start backpropagation. The two cross-entropy losses are fused with
their matching output activation: ``SoftmaxCrossEntropy`` consumes raw
logits and returns the gradient with respect to those logits, and
``BinaryCrossEntropy`` consumes post-sigmoid probabilities but returns
the gradient with respect to the logits behind them. The fusion is
what keeps the backward pass numerically tame; the model layer knows,
via the ``fused`` attribute, which tensor to feed and that the first
backward step must skip the activation derivative.
"""

from __future__ import annotations

import numpy as np

_EPS = 1e-7


class Loss:
    name = "loss"
    fused = None  # or the activation name the gradient is fused through

    def value(self, pred, target):
        raise NotImplementedError

    def grad(self, pred, target):
        raise NotImplementedError


class MeanSquaredError(Loss):
    """mean((pred - target)^2) over all elements; grad 2(pred - target)/n."""

    name = "mse"

    def value(self, pred, target):
        pred, target = _aligned(pred, target)
        d = pred - target
        return float(np.mean(d * d))

    def grad(self, pred, target):
        pred, target = _aligned(pred, target)
        return 2.0 * (pred - target) / pred.size


class MeanAbsoluteError(Loss):
    """mean(|pred - target|); grad sign(pred - target)/n with sign(0) = 0."""

    name = "mae"

    def value(self, pred, target):
        pred, target = _aligned(pred, target)
        return float(np.mean(np.abs(pred - target)))

    def grad(self, pred, target):
        pred, target = _aligned(pred, target)
        return np.sign(pred - target) / pred.size


class SoftmaxCrossEntropy(Loss):
    """Cross entropy over one-hot rows, fused with a softmax output.

    ``value`` and ``grad`` both take raw logits. The averaged value is
    -(1/b) * sum(target * log softmax(logits)) over the b rows, and the
    fused gradient with respect to the logits is
    (softmax(logits) - target) / b.
    """

    name = "categorical_crossentropy"
    fused = "softmax"

    def value(self, logits, target):
        logits, target = _aligned(logits, target)
        _check_one_hot(target)
        logp = _log_softmax(logits)
        b = _row_count(logits)
        return float(-np.sum(target * logp) / b)

    def grad(self, logits, target):
        logits, target = _aligned(logits, target)
        _check_one_hot(target)
        from .activations import softmax

        b = _row_count(logits)
        return (softmax(logits) - target) / b


class BinaryCrossEntropy(Loss):
    """Binary cross entropy fused with a sigmoid output.

    ``value`` takes probabilities (already through sigmoid), clamped to
    [eps, 1-eps] before the logs. ``grad`` returns the gradient with
    respect to the logits, (p - target)/n, which is the fused form and
    needs no clamping.
    """

    name = "binary_crossentropy"
    fused = "sigmoid"

    def value(self, pred, target):
        pred, target = _aligned(pred, target)
        p = np.clip(pred, _EPS, 1.0 - _EPS)
        return float(-np.mean(target * np.log(p) + (1.0 - target) * np.log(1.0 - p)))

    def grad(self, pred, target):
        pred, target = _aligned(pred, target)
        return (pred - target) / pred.size


def _aligned(pred, target):
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(
            "loss operands must share a shape, got %s and %s"
            % (pred.shape, target.shape)
        )
    return pred, target


def _row_count(x):
    # every leading axis indexes a one-hot row, so a (batch, T, C)
    # sequence averages over batch*T rows, not over the batch alone
    return x.size // x.shape[-1] if x.ndim > 1 else 1


def _check_one_hot(target):
    flat = target.reshape(-1, target.shape[-1])
    ok = np.all((flat == 0.0) | (flat == 1.0), axis=1) & (np.sum(flat, axis=1) == 1.0)
    if not np.all(ok):
        bad = int(np.argmin(ok))
        raise ValueError(
            "categorical cross entropy needs one-hot target rows; row %d is %s"
            % (bad, flat[bad])
        )


def _log_softmax(x):
    shifted = x - np.max(x, axis=-1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))


_REGISTRY = {
    "mse": MeanSquaredError,
    "mean_squared_error": MeanSquaredError,
    "mae": MeanAbsoluteError,
    "mean_absolute_error": MeanAbsoluteError,
    "categorical_crossentropy": SoftmaxCrossEntropy,
    "binary_crossentropy": BinaryCrossEntropy,
}


def get(name):
    if isinstance(name, Loss):
        return name
    try:
        return _REGISTRY[name]()
    except KeyError:
        raise ValueError(
            "unknown loss %r (choices: %s)" % (name, ", ".join(sorted(_REGISTRY)))
        ) from None
