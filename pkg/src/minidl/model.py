"""Sequential model container: compile, fit, evaluate, save and load.

Training is plain minibatch gradient descent: forward in train mode,
loss gradient, backward, one optimizer step over every trainable
parameter. Losses fused with the output activation (softmax or sigmoid
cross entropy) start backpropagation at the final preactivation; the
model handles the bookkeeping so layers stay oblivious.

The on-disk model format is a single little-endian binary file:
magic ``GBK1``, a u16 format version, a u32-length JSON manifest
(architecture, loss and optimizer names, input shape), then one block
per saved array (u16 name length and name, u8 rank, u32 extents, raw
float64 data), and a trailing CRC32 of everything before it.
"""

from __future__ import annotations

import io
import json
import struct
import zlib

import numpy as np

from . import losses as losses_mod
from . import metrics as metrics_mod
from . import optim as optim_mod
from .conv import Conv2D, Pool2D
from .layers import BatchNorm, Dense, Dropout, Flatten, Layer
from .recurrent import LSTM, Embedding, SimpleRNN, TimeDistributedDense
from .tensor import Rng

MAGIC = b"GBK1"
FORMAT_VERSION = 1

LAYER_KINDS = {
    "dense": Dense,
    "dropout": Dropout,
    "batchnorm": BatchNorm,
    "flatten": Flatten,
    "conv2d": Conv2D,
    "pool2d": Pool2D,
    "embedding": Embedding,
    "simple_rnn": SimpleRNN,
    "lstm": LSTM,
    "time_distributed_dense": TimeDistributedDense,
}


class ModelFileError(ValueError):
    """Raised for unreadable or mismatched model files."""


class NanLossError(RuntimeError):
    """Raised when the training loss stops being finite."""

    def __init__(self, epoch, batch):
        self.epoch = epoch
        self.batch = batch
        super().__init__(
            "training loss became non-finite at epoch %d, batch %d" % (epoch, batch)
        )


class History:
    """Per-epoch training log. Column order is fixed: epoch, loss, the
    training metrics, then val_loss and validation metrics when present."""

    def __init__(self, metric_names, has_validation):
        self.metric_names = list(metric_names)
        self.has_validation = bool(has_validation)
        self.epochs = []
        cols = ["loss"] + self.metric_names
        if has_validation:
            cols += ["val_loss"] + ["val_" + m for m in self.metric_names]
        self.history = {c: [] for c in cols}

    def append(self, epoch, logs):
        self.epochs.append(epoch)
        for c in self.history:
            self.history[c].append(logs[c])

    def last(self, key):
        return self.history[key][-1]

    def save_csv(self, path):
        import csv

        cols = ["loss"] + self.metric_names
        if self.has_validation:
            cols += ["val_loss"] + ["val_" + m for m in self.metric_names]
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["epoch"] + cols)
            for i, e in enumerate(self.epochs):
                w.writerow([e] + [repr(self.history[c][i]) for c in cols])


class Callback:
    def on_epoch_end(self, epoch, logs, model):
        pass


class EarlyStopping(Callback):
    """Stop after ``patience`` consecutive epochs whose monitored loss
    fails to improve on the best seen by more than ``min_delta``.
    ``restore_best`` puts the best epoch's weights back on stop."""

    def __init__(self, monitor="val_loss", min_delta=0.0, patience=1, restore_best=False):
        if monitor not in ("loss", "val_loss"):
            raise ValueError("early stopping monitors loss or val_loss, got %r" % (monitor,))
        self.monitor = monitor
        self.min_delta = float(min_delta)
        self.patience = int(patience)
        self.restore_best = bool(restore_best)
        self.best = None
        self.wait = 0
        self.stop_training = False
        self.stopped_epoch = None
        self._snapshot = None

    def on_epoch_end(self, epoch, logs, model):
        if self.monitor not in logs:
            raise ValueError(
                "early stopping monitor %r is not tracked; available: %s"
                % (self.monitor, sorted(logs))
            )
        value = logs[self.monitor]
        if self.best is None or value < self.best - self.min_delta:
            self.best = value
            self.wait = 0
            if self.restore_best:
                self._snapshot = model.copy_weights()
        else:
            self.wait += 1
            if self.wait >= self.patience:
                self.stop_training = True
                self.stopped_epoch = epoch
                if self.restore_best and self._snapshot is not None:
                    model.set_weights(self._snapshot)


class Checkpoint(Callback):
    """Write the model to ``pattern`` at each epoch end. The pattern is
    a str.format template over epoch and the epoch's logs, for example
    ``"ckpt-{epoch:03d}-{loss:.4f}.gbk"``. An existing file at the
    formatted path is overwritten. With ``save_best_only`` only epochs
    improving the monitored value are written."""

    def __init__(self, pattern, monitor="val_loss", save_best_only=False):
        self.pattern = pattern
        self.monitor = monitor
        self.save_best_only = bool(save_best_only)
        self.best = None
        self.saved_paths = []

    def on_epoch_end(self, epoch, logs, model):
        if self.save_best_only:
            if self.monitor not in logs:
                raise ValueError(
                    "checkpoint monitor %r is not tracked; available: %s"
                    % (self.monitor, sorted(logs))
                )
            value = logs[self.monitor]
            if self.best is not None and value >= self.best:
                return
            self.best = value
        path = self.pattern.format(epoch=epoch, **logs)
        model.save(path)
        self.saved_paths.append(path)


class SequentialModel:
    """A stack of layers applied in order."""

    def __init__(self, layers=None, seed=0):
        self.layers = list(layers) if layers is not None else []
        self.seed = int(seed)
        self.rng = Rng(seed)
        self.loss = None
        self.optimizer = None
        self.input_shape = None
        self.output_shape = None
        self.compiled = False
        self._metrics = []

    def add(self, layer):
        if not isinstance(layer, Layer):
            raise TypeError("add expects a Layer, got %r" % (layer,))
        self.layers.append(layer)

    # -- compile ---------------------------------------------------------

    def compile(self, input_shape, loss, optimizer, metrics=()):
        """Build every layer for the given per-sample input shape and
        attach loss, optimizer, and metric functions."""
        if not self.layers:
            raise ValueError("model has no layers")
        shape = tuple(int(d) for d in input_shape)
        self.input_shape = shape
        for i, layer in enumerate(self.layers):
            try:
                layer.build(shape, self.rng)
                out = layer.out_shape(shape)
            except ValueError as e:
                raise ValueError("layer %d (%s): %s" % (i, layer.kind, e)) from None
            shape = tuple(int(d) for d in out)
        self.output_shape = shape
        self.loss = losses_mod.get(loss)
        self.optimizer = optim_mod.get(optimizer) if isinstance(optimizer, str) else optimizer
        if self.loss.fused is not None:
            act = getattr(self.layers[-1], "activation", None)
            if act is None or act.name != self.loss.fused:
                raise ValueError(
                    "loss %s needs the final layer to apply %s, found %s"
                    % (
                        self.loss.name,
                        self.loss.fused,
                        act.name if act is not None else "no activation",
                    )
                )
        self._metrics = [(m, self._resolve_metric(m)) for m in metrics]
        self.compiled = True
        return self

    def _resolve_metric(self, name):
        if name in ("accuracy", "acc"):
            if self.loss.fused == "softmax":
                return metrics_mod.categorical_accuracy
            return metrics_mod.binary_accuracy
        if name == "categorical_accuracy":
            return metrics_mod.categorical_accuracy
        if name == "binary_accuracy":
            return metrics_mod.binary_accuracy
        raise ValueError("unknown metric %r" % (name,))

    # -- forward / backward ----------------------------------------------

    def forward(self, x, train=False):
        self._require_compiled()
        out = x
        for layer in self.layers:
            out = layer.forward(out, train=train)
        return out

    def backward(self, grad, preact=False):
        """Run the full backward pass from an output gradient. ``preact``
        marks the gradient as being with respect to the final layer's
        preactivation (fused losses)."""
        g = grad
        for i in range(len(self.layers) - 1, -1, -1):
            g = self.layers[i].backward(g, preact=(preact and i == len(self.layers) - 1))
            if g is None and i > 0:
                raise RuntimeError(
                    "layer %d (%s) ended the gradient chain with layers below it"
                    % (i, self.layers[i].kind)
                )
        return g

    def named_params(self, trainable_only=True):
        out = {}
        for i, layer in enumerate(self.layers):
            if trainable_only and not layer.trainable:
                continue
            for k, v in layer.params.items():
                out["layer%d/%s" % (i, k)] = v
        return out

    def named_grads(self):
        out = {}
        for i, layer in enumerate(self.layers):
            if not layer.trainable:
                continue
            for k, v in layer.grads.items():
                out["layer%d/%s" % (i, k)] = v
        return out

    def _loss_input(self, out):
        if self.loss.fused == "softmax":
            return self.layers[-1].preactivation
        return out

    def train_on_batch(self, x, y):
        """One optimizer step on one batch. Returns (loss value, batch
        output) so callers can fold in metrics without a second pass."""
        self._require_compiled()
        out = self.forward(x, train=True)
        loss_in = self._loss_input(out)
        value = self.loss.value(loss_in, y)
        grad = self.loss.grad(loss_in, y)
        self.backward(grad, preact=self.loss.fused is not None)
        grads = self.named_grads()
        params = {k: v for k, v in self.named_params().items() if k in grads}
        self.optimizer.step(params, grads)
        return value, out

    # -- training loop -----------------------------------------------------

    def fit(
        self,
        X,
        Y,
        epochs,
        batch_size=32,
        validation_split=0.0,
        validation_data=None,
        callbacks=(),
        verbose=False,
    ):
        """Train for ``epochs`` passes.

        When ``validation_split`` is given the last fraction of the rows
        (in the order supplied, before any shuffling) is held out once
        and reused every epoch. Training rows are reshuffled each epoch
        from the model's seeded generator. Epoch numbers in the history
        and callback logs are 1-based.
        """
        self._require_compiled()
        X = np.asarray(X, dtype=np.float64)
        Y = np.asarray(Y, dtype=np.float64)
        if X.shape[0] != Y.shape[0]:
            raise ValueError(
                "X and Y row counts differ: %d vs %d" % (X.shape[0], Y.shape[0])
            )
        if validation_data is not None:
            Xv = np.asarray(validation_data[0], dtype=np.float64)
            Yv = np.asarray(validation_data[1], dtype=np.float64)
            Xt, Yt = X, Y
        elif validation_split > 0.0:
            n_train = X.shape[0] - int(X.shape[0] * validation_split)
            Xt, Yt = X[:n_train], Y[:n_train]
            Xv, Yv = X[n_train:], Y[n_train:]
        else:
            Xt, Yt = X, Y
            Xv = Yv = None
        metric_names = [m for m, _ in self._metrics]
        history = History(metric_names, has_validation=Xv is not None)
        n = Xt.shape[0]
        callbacks = list(callbacks)
        for epoch in range(1, epochs + 1):
            order = self.rng.permutation(n)
            total = 0.0
            msums = [0.0] * len(self._metrics)
            seen = 0
            for bi, lo in enumerate(range(0, n, batch_size)):
                idx = order[lo : lo + batch_size]
                value, out = self.train_on_batch(Xt[idx], Yt[idx])
                if not np.isfinite(value):
                    raise NanLossError(epoch, bi)
                rows = len(idx)
                total += value * rows
                for j, (_, fn) in enumerate(self._metrics):
                    msums[j] += fn(out, Yt[idx]) * rows
                seen += rows
            logs = {"loss": total / seen}
            for j, name in enumerate(metric_names):
                logs[name] = msums[j] / seen
            if Xv is not None:
                ev = self.evaluate(Xv, Yv, batch_size=batch_size)
                logs["val_loss"] = ev["loss"]
                for name in metric_names:
                    logs["val_" + name] = ev[name]
            history.append(epoch, logs)
            if verbose:
                print(
                    "epoch %d/%d  %s"
                    % (
                        epoch,
                        epochs,
                        "  ".join("%s=%.6f" % (k, logs[k]) for k in sorted(logs)),
                    )
                )
            stop = False
            for cb in callbacks:
                cb.on_epoch_end(epoch, logs, self)
                stop = stop or getattr(cb, "stop_training", False)
            if stop:
                break
        return history

    def evaluate(self, X, Y, batch_size=32):
        """Loss and metrics in inference mode, averaged over rows."""
        self._require_compiled()
        X = np.asarray(X, dtype=np.float64)
        Y = np.asarray(Y, dtype=np.float64)
        n = X.shape[0]
        total = 0.0
        msums = [0.0] * len(self._metrics)
        for lo in range(0, n, batch_size):
            xb = X[lo : lo + batch_size]
            yb = Y[lo : lo + batch_size]
            out = self.forward(xb, train=False)
            total += self.loss.value(self._loss_input(out), yb) * xb.shape[0]
            for j, (_, fn) in enumerate(self._metrics):
                msums[j] += fn(out, yb) * xb.shape[0]
        result = {"loss": total / n}
        for j, (name, _) in enumerate(self._metrics):
            result[name] = msums[j] / n
        return result

    def predict(self, X, batch_size=256):
        self._require_compiled()
        X = np.asarray(X, dtype=np.float64)
        parts = []
        for lo in range(0, X.shape[0], batch_size):
            parts.append(self.forward(X[lo : lo + batch_size], train=False))
        return np.concatenate(parts, axis=0)

    # -- introspection -----------------------------------------------------

    def param_counts(self):
        return [layer.param_count() for layer in self.layers]

    def total_params(self):
        return sum(self.param_counts())

    def summary(self):
        self._require_compiled()
        lines = ["%-4s %-24s %-20s %12s" % ("#", "layer", "output shape", "params")]
        shape = self.input_shape
        for i, layer in enumerate(self.layers):
            shape = layer.out_shape(shape)
            lines.append(
                "%-4d %-24s %-20s %12d"
                % (i, layer.kind, str(tuple(shape)), layer.param_count())
            )
        lines.append("total params: %d" % self.total_params())
        return "\n".join(lines)

    def _require_compiled(self):
        if not self.compiled:
            raise RuntimeError("model is not compiled; call compile() first")

    # -- weight snapshots ---------------------------------------------------

    def copy_weights(self):
        snap = []
        for layer in self.layers:
            snap.append(
                (
                    {k: v.copy() for k, v in layer.params.items()},
                    {k: v.copy() for k, v in layer.state.items()},
                )
            )
        return snap

    def set_weights(self, snapshot):
        for layer, (params, state) in zip(self.layers, snapshot):
            for k, v in params.items():
                layer.params[k][...] = v
            for k, v in state.items():
                layer.state[k][...] = v

    # -- persistence ---------------------------------------------------------

    def manifest(self):
        return {
            "format_version": FORMAT_VERSION,
            "input_shape": list(self.input_shape),
            "loss": self.loss.name if self.loss is not None else None,
            "optimizer": self.optimizer.name if self.optimizer is not None else None,
            "layers": [
                {"kind": layer.kind, "hyper": layer.hyper()} for layer in self.layers
            ],
        }

    def _blocks(self):
        for i, layer in enumerate(self.layers):
            for k in sorted(layer.params):
                yield "layer%d/%s" % (i, k), layer.params[k]
            for k in sorted(layer.state):
                yield "layer%d/state/%s" % (i, k), layer.state[k]

    def save(self, path):
        """Serialize architecture and weights; see the module docstring
        for the byte layout."""
        self._require_compiled()
        buf = io.BytesIO()
        buf.write(MAGIC)
        buf.write(struct.pack("<H", FORMAT_VERSION))
        mbytes = json.dumps(self.manifest(), sort_keys=True).encode("utf-8")
        buf.write(struct.pack("<I", len(mbytes)))
        buf.write(mbytes)
        for name, arr in self._blocks():
            nb = name.encode("utf-8")
            buf.write(struct.pack("<H", len(nb)))
            buf.write(nb)
            buf.write(struct.pack("<B", arr.ndim))
            for d in arr.shape:
                buf.write(struct.pack("<I", d))
            buf.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        payload = buf.getvalue()
        with open(path, "wb") as f:
            f.write(payload)
            f.write(struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF))

    def load_weights(self, path):
        """Load weights from a saved file into this (already compiled)
        model. The stored architecture must match layer for layer."""
        self._require_compiled()
        manifest, arrays = _read_model_file(path)
        stored = manifest["layers"]
        if len(stored) != len(self.layers):
            raise ModelFileError(
                "stored model has %d layers, this model has %d"
                % (len(stored), len(self.layers))
            )
        for i, (entry, layer) in enumerate(zip(stored, self.layers)):
            if entry["kind"] != layer.kind:
                raise ModelFileError(
                    "architecture mismatch at layer %d: file has %s, model has %s"
                    % (i, entry["kind"], layer.kind)
                )
            if entry["hyper"] != layer.hyper():
                raise ModelFileError(
                    "architecture mismatch at layer %d (%s): file hyperparameters %s, "
                    "model has %s" % (i, layer.kind, entry["hyper"], layer.hyper())
                )
        if tuple(manifest["input_shape"]) != tuple(self.input_shape):
            raise ModelFileError(
                "stored input shape %s does not match model input shape %s"
                % (tuple(manifest["input_shape"]), tuple(self.input_shape))
            )
        self._apply_arrays(arrays)

    def _apply_arrays(self, arrays):
        for i, layer in enumerate(self.layers):
            for k in layer.params:
                name = "layer%d/%s" % (i, k)
                if name not in arrays:
                    raise ModelFileError("file is missing parameter %r" % (name,))
                if arrays[name].shape != layer.params[k].shape:
                    raise ModelFileError(
                        "architecture mismatch at layer %d: parameter %r has shape %s "
                        "in file, %s in model"
                        % (i, name, arrays[name].shape, layer.params[k].shape)
                    )
                layer.params[k][...] = arrays[name]
            for k in layer.state:
                name = "layer%d/state/%s" % (i, k)
                if name in arrays:
                    layer.state[k][...] = arrays[name]


def load_model(path, seed=0):
    """Rebuild a model from a saved file: layers from the manifest, then
    weights. The optimizer comes back as its kind with default settings,
    which is enough for inference and fresh fine-tuning."""
    manifest, arrays = _read_model_file(path)
    layers = []
    for entry in manifest["layers"]:
        kind = entry["kind"]
        if kind not in LAYER_KINDS:
            raise ModelFileError("unknown layer kind %r in file" % (kind,))
        layers.append(LAYER_KINDS[kind](**entry["hyper"]))
    model = SequentialModel(layers, seed=seed)
    model.compile(
        tuple(manifest["input_shape"]),
        manifest["loss"] or "mse",
        manifest["optimizer"] or "sgd",
    )
    model._apply_arrays(arrays)
    return model


def _read_model_file(path):
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < len(MAGIC) + 2 + 4 + 4:
        raise ModelFileError("model file is truncated")
    if raw[: len(MAGIC)] != MAGIC:
        raise ModelFileError("not a model file (bad magic)")
    pos = len(MAGIC)

    def need(k):
        nonlocal pos
        if pos + k > len(raw) - 4:
            raise ModelFileError("model file is truncated")
        chunk = raw[pos : pos + k]
        pos += k
        return chunk

    (version,) = struct.unpack("<H", need(2))
    if version != FORMAT_VERSION:
        raise ModelFileError(
            "unsupported model format version %d (expected %d)"
            % (version, FORMAT_VERSION)
        )
    (mlen,) = struct.unpack("<I", need(4))
    try:
        manifest = json.loads(need(mlen).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ModelFileError("model manifest is unreadable: %s" % (e,)) from None
    arrays = {}
    while pos < len(raw) - 4:
        (nlen,) = struct.unpack("<H", need(2))
        name = need(nlen).decode("utf-8")
        (rank,) = struct.unpack("<B", need(1))
        shape = tuple(struct.unpack("<I", need(4))[0] for _ in range(rank))
        count = 1
        for d in shape:
            count *= d
        data = need(8 * count)
        arrays[name] = np.frombuffer(data, dtype="<f8").reshape(shape).copy()
    (stored_crc,) = struct.unpack("<I", raw[-4:])
    if zlib.crc32(raw[:-4]) & 0xFFFFFFFF != stored_crc:
        raise ModelFileError("model file checksum mismatch")
    return manifest, arrays


# ---------------------------------------------------------------------------
# dataset splitting
# ---------------------------------------------------------------------------

def train_val_test_split(X, Y, test_fraction, rng):
    """Shuffle rows with ``rng`` and carve off ``test_fraction`` of them,
    split evenly into validation and test halves. Returns
    (X_train, Y_train, X_val, Y_val, X_test, Y_test)."""
    X = np.asarray(X)
    Y = np.asarray(Y)
    n = X.shape[0]
    if X.shape[0] != Y.shape[0]:
        raise ValueError("X and Y row counts differ: %d vs %d" % (X.shape[0], Y.shape[0]))
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1), got %r" % (test_fraction,))
    perm = rng.permutation(n)
    holdout = int(n * test_fraction)
    cut = n - holdout
    half = holdout // 2
    tr, va, te = perm[:cut], perm[cut : cut + half], perm[cut + half :]
    return X[tr], Y[tr], X[va], Y[va], X[te], Y[te]


def kfold_indices(n, k, rng):
    """Seeded k-fold split of range(n): a list of (train_idx, test_idx)
    pairs where every index lands in exactly one test fold and fold
    sizes differ by at most one."""
    if not 2 <= k <= n:
        raise ValueError("need 2 <= k <= n, got k=%d, n=%d" % (k, n))
    perm = rng.permutation(n)
    folds = np.array_split(perm, k)
    out = []
    for i in range(k):
        test = folds[i]
        train = np.concatenate([folds[j] for j in range(k) if j != i])
        out.append((train, test))
    return out
