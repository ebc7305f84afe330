"""Feed-forward layers with explicit forward and backward passes.

Each layer caches what its own backward pass needs during forward, so
training code is just forward, loss gradient, backward, optimizer step.
``backward`` takes the upstream gradient and returns the gradient with
respect to the layer input; parameter gradients land in ``self.grads``
keyed like ``self.params``.

The ``preact`` flag on ``backward`` exists for losses fused with the
output activation: when True the layer treats the incoming gradient as
already being with respect to its preactivation and skips the
activation derivative. Only the final layer of a model should ever see
preact=True.
"""

from __future__ import annotations

import math

import numpy as np

from . import activations


# ---------------------------------------------------------------------------
# weight initializers
# ---------------------------------------------------------------------------

def variance_scaling(mode="fan_in"):
    """Normal draws with std 1/sqrt(fan), fan chosen by mode
    (fan_in, fan_out, or their average)."""
    if mode not in ("fan_in", "fan_out", "fan_avg"):
        raise ValueError("unknown variance scaling mode %r" % (mode,))

    def init(shape, rng, fan_in, fan_out):
        fan = {
            "fan_in": fan_in,
            "fan_out": fan_out,
            "fan_avg": 0.5 * (fan_in + fan_out),
        }[mode]
        return rng.normal(shape, std=1.0 / math.sqrt(fan))

    return init


def glorot_normal():
    """Normal draws with std sqrt(2 / (fan_in + fan_out))."""

    def init(shape, rng, fan_in, fan_out):
        return rng.normal(shape, std=math.sqrt(2.0 / (fan_in + fan_out)))

    return init


def random_normal(std=0.02):
    def init(shape, rng, fan_in, fan_out):
        return rng.normal(shape, std=std)

    return init


def get_initializer(spec):
    """Resolve an initializer: a callable passes through, a string names
    a family, and ("normal", std) fixes the spread explicitly."""
    if callable(spec):
        return spec
    if isinstance(spec, str):
        if spec == "glorot":
            return glorot_normal()
        if spec in ("fan_in", "fan_out", "fan_avg"):
            return variance_scaling(spec)
        if spec == "normal":
            return random_normal()
        raise ValueError("unknown initializer %r" % (spec,))
    if isinstance(spec, (tuple, list)) and len(spec) == 2 and spec[0] == "normal":
        return random_normal(float(spec[1]))
    raise ValueError("unknown initializer %r" % (spec,))


# ---------------------------------------------------------------------------
# base layer
# ---------------------------------------------------------------------------

class Layer:
    kind = "layer"

    def __init__(self):
        self.params = {}
        self.grads = {}
        self.state = {}  # saved but not optimized (running stats)
        self.built = False
        self.trainable = True

    def build(self, input_shape, rng):
        """Create parameters for the given per-sample input shape."""
        self.input_shape = tuple(input_shape)
        self.built = True

    def out_shape(self, input_shape):
        return tuple(input_shape)

    def forward(self, x, train=False):
        raise NotImplementedError

    def backward(self, upstream, preact=False):
        raise NotImplementedError

    def param_count(self):
        return int(sum(p.size for p in self.params.values()))

    def hyper(self):
        """Constructor arguments needed to rebuild the layer."""
        return {}

    def _check_input(self, x):
        if x.shape[1:] != self.input_shape:
            raise ValueError(
                "%s expected per-sample shape %s, got %s"
                % (self.kind, self.input_shape, x.shape[1:])
            )


class Dense(Layer):
    """Fully connected layer: out = act(x @ W + b)."""

    kind = "dense"

    def __init__(self, units, activation="linear", init="glorot", leaky_slope=0.2):
        super().__init__()
        self.units = int(units)
        self.activation = activations.get(activation, slope=leaky_slope)
        self._init_spec = init
        self._leaky_slope = leaky_slope

    def build(self, input_shape, rng):
        if len(input_shape) != 1:
            raise ValueError(
                "dense expects flat per-sample input, got shape %s" % (input_shape,)
            )
        n_in = input_shape[0]
        init = get_initializer(self._init_spec)
        self.params = {
            "W": init((n_in, self.units), rng, n_in, self.units),
            "b": np.zeros(self.units),
        }
        super().build(input_shape, rng)

    def out_shape(self, input_shape):
        return (self.units,)

    def forward(self, x, train=False):
        x = np.asarray(x, dtype=np.float64)
        self._check_input(x)
        self._x = x
        self._pre = x @ self.params["W"] + self.params["b"]
        self._out = self.activation.fn(self._pre)
        return self._out

    def backward(self, upstream, preact=False):
        if preact:
            delta = upstream
        else:
            delta = upstream * self.activation.deriv(self._pre, self._out)
        self.grads = {
            "W": self._x.T @ delta,
            "b": np.sum(delta, axis=0),
        }
        return delta @ self.params["W"].T

    @property
    def preactivation(self):
        """Last forward pass's x @ W + b, before the activation."""
        return self._pre

    def hyper(self):
        h = {"units": self.units, "activation": self.activation.name}
        if self.activation.name == "leaky_relu":
            h["leaky_slope"] = self._leaky_slope
        return h


class Dropout(Layer):
    """Inverted dropout. ``rate`` is the probability an activation is
    dropped; surviving values are scaled by 1/(1-rate) during training
    so inference is a plain identity."""

    kind = "dropout"

    def __init__(self, rate):
        super().__init__()
        if not 0.0 <= rate < 1.0:
            raise ValueError("dropout rate must be in [0, 1), got %r" % (rate,))
        self.rate = float(rate)

    def build(self, input_shape, rng):
        self._rng = rng
        super().build(input_shape, rng)

    def forward(self, x, train=False):
        # shape-agnostic; the mask is drawn fresh for whatever arrives
        x = np.asarray(x, dtype=np.float64)
        if not train or self.rate == 0.0:
            self._mask = None
            return x
        keep = 1.0 - self.rate
        self._mask = (self._rng.uniform(x.shape) >= self.rate).astype(np.float64) / keep
        return x * self._mask

    def backward(self, upstream, preact=False):
        if self._mask is None:
            return upstream
        return upstream * self._mask

    def hyper(self):
        return {"rate": self.rate}


class BatchNorm(Layer):
    """Batch normalization over the feature axis of 2-D input.

    Training uses batch mean and (biased) variance and folds them into
    running statistics with the given momentum; inference uses the
    running statistics. A training batch of one row has no variance to
    speak of and is rejected.
    """

    kind = "batchnorm"

    def __init__(self, momentum=0.99, eps=1e-3):
        super().__init__()
        self.momentum = float(momentum)
        self.eps = float(eps)

    def build(self, input_shape, rng):
        if len(input_shape) != 1:
            raise ValueError(
                "batchnorm expects flat per-sample input, got shape %s" % (input_shape,)
            )
        n = input_shape[0]
        self.params = {"gamma": np.ones(n), "beta": np.zeros(n)}
        self.state = {"running_mean": np.zeros(n), "running_var": np.ones(n)}
        super().build(input_shape, rng)

    def forward(self, x, train=False):
        x = np.asarray(x, dtype=np.float64)
        self._check_input(x)
        if train:
            if x.shape[0] < 2:
                raise ValueError(
                    "batchnorm cannot train on a batch of %d row" % x.shape[0]
                )
            mu = np.mean(x, axis=0)
            var = np.var(x, axis=0)
            m = self.momentum
            self.state["running_mean"][:] = m * self.state["running_mean"] + (1 - m) * mu
            self.state["running_var"][:] = m * self.state["running_var"] + (1 - m) * var
        else:
            mu = self.state["running_mean"]
            var = self.state["running_var"]
        self._inv_std = 1.0 / np.sqrt(var + self.eps)
        self._xhat = (x - mu) * self._inv_std
        self._train_batch = x.shape[0] if train else None
        return self.params["gamma"] * self._xhat + self.params["beta"]

    def backward(self, upstream, preact=False):
        xhat = self._xhat
        self.grads = {
            "gamma": np.sum(upstream * xhat, axis=0),
            "beta": np.sum(upstream, axis=0),
        }
        dxhat = upstream * self.params["gamma"]
        if self._train_batch is None:
            # inference-mode backward (frozen statistics) is a plain
            # elementwise scale
            return dxhat * self._inv_std
        n = self._train_batch
        return (
            self._inv_std
            / n
            * (n * dxhat - np.sum(dxhat, axis=0) - xhat * np.sum(dxhat * xhat, axis=0))
        )

    def hyper(self):
        return {"momentum": self.momentum, "eps": self.eps}


class Flatten(Layer):
    kind = "flatten"

    def build(self, input_shape, rng):
        self._n = int(np.prod(input_shape, dtype=np.int64))
        super().build(input_shape, rng)

    def out_shape(self, input_shape):
        return (int(np.prod(input_shape, dtype=np.int64)),)

    def forward(self, x, train=False):
        x = np.asarray(x, dtype=np.float64)
        self._check_input(x)
        self._shape = x.shape
        return np.ascontiguousarray(x).reshape(x.shape[0], self._n)

    def backward(self, upstream, preact=False):
        return upstream.reshape(self._shape)
