"""Two-dimensional convolution and pooling over channels-last input.

Input layout is [batch, height, width, channels] and kernels are
[kh, kw, in_channels, out_channels]. The convolution is the
cross-correlation form (no kernel flip). Spatial output extent per axis
follows

    out = floor((in + pad_lo + pad_hi - k - (k - 1) * (dilation - 1)) / stride) + 1

with "valid" padding meaning zero and "same" meaning output size
ceil(in / stride), any odd padding overhang going to the bottom/right
edge. The forward pass lowers patches to a matrix (im2col) so the core
work is one matmul; backward scatters through the same indexing.
"""

from __future__ import annotations

import numpy as np

from . import activations
from .layers import Layer, get_initializer


def _pair(v):
    if isinstance(v, (tuple, list)):
        if len(v) != 2:
            raise ValueError("expected a pair, got %r" % (v,))
        return int(v[0]), int(v[1])
    return int(v), int(v)


def conv_output_size(n, k, stride, pad_lo, pad_hi, dilation=1):
    eff = k + (k - 1) * (dilation - 1)
    span = n + pad_lo + pad_hi - eff
    if span < 0:
        raise ValueError(
            "kernel extent %d (dilation %d) exceeds padded input %d"
            % (eff, dilation, n + pad_lo + pad_hi)
        )
    return span // stride + 1


def _resolve_padding(padding, n, k, stride, dilation):
    """Per-axis (lo, hi) padding. Strings: valid or same."""
    eff = k + (k - 1) * (dilation - 1)
    if padding == "valid":
        return 0, 0
    if padding == "same":
        out = -(-n // stride)  # ceil
        total = max((out - 1) * stride + eff - n, 0)
        lo = total // 2
        return lo, total - lo
    p = int(padding)
    return p, p


class Conv2D(Layer):
    kind = "conv2d"

    def __init__(
        self,
        filters,
        kernel_size,
        stride=1,
        padding="valid",
        dilation=1,
        activation="linear",
        init="glorot",
    ):
        super().__init__()
        self.filters = int(filters)
        self.kernel_size = _pair(kernel_size)
        self.stride = _pair(stride)
        self.padding = padding
        self.dilation = _pair(dilation)
        self.activation = activations.get(activation)
        self._init_spec = init

    def build(self, input_shape, rng):
        if len(input_shape) != 3:
            raise ValueError(
                "conv2d expects [height, width, channels] input, got %s"
                % (input_shape,)
            )
        kh, kw = self.kernel_size
        cin = input_shape[2]
        fan_in = kh * kw * cin
        fan_out = kh * kw * self.filters
        init = get_initializer(self._init_spec)
        self.params = {
            "W": init((kh, kw, cin, self.filters), rng, fan_in, fan_out),
            "b": np.zeros(self.filters),
        }
        super().build(input_shape, rng)

    def _geometry(self, h, w):
        kh, kw = self.kernel_size
        sh, sw = self.stride
        dh, dw = self.dilation
        pt, pb = _resolve_padding(self.padding, h, kh, sh, dh)
        pl, pr = _resolve_padding(self.padding, w, kw, sw, dw)
        oh = conv_output_size(h, kh, sh, pt, pb, dh)
        ow = conv_output_size(w, kw, sw, pl, pr, dw)
        return (pt, pb, pl, pr, oh, ow)

    def out_shape(self, input_shape):
        h, w, _ = input_shape
        *_, oh, ow = self._geometry(h, w)
        return (oh, ow, self.filters)

    def forward(self, x, train=False):
        x = np.asarray(x, dtype=np.float64)
        self._check_input(x)
        b, h, w, cin = x.shape
        kh, kw = self.kernel_size
        pt, pb, pl, pr, oh, ow = self._geometry(h, w)
        xp = np.pad(x, ((0, 0), (pt, pb), (pl, pr), (0, 0)))
        cols = self._im2col(xp, oh, ow)  # [b*oh*ow, kh*kw*cin]
        wmat = self.params["W"].reshape(kh * kw * cin, self.filters)
        pre = cols @ wmat + self.params["b"]
        self._cache = (cols, xp.shape, (pt, pb, pl, pr, oh, ow), x.shape)
        self._pre = pre.reshape(b, oh, ow, self.filters)
        self._out = self.activation.fn(self._pre)
        return self._out

    def _im2col(self, xp, oh, ow):
        b, hp, wp, cin = xp.shape
        kh, kw = self.kernel_size
        sh, sw = self.stride
        dh, dw = self.dilation
        cols = np.empty((b, oh, ow, kh, kw, cin))
        for ki in range(kh):
            i0 = ki * dh
            for kj in range(kw):
                j0 = kj * dw
                cols[:, :, :, ki, kj, :] = xp[
                    :, i0 : i0 + sh * oh : sh, j0 : j0 + sw * ow : sw, :
                ]
        return cols.reshape(b * oh * ow, kh * kw * cin)

    def backward(self, upstream, preact=False):
        if preact:
            delta = upstream
        else:
            delta = upstream * self.activation.deriv(self._pre, self._out)
        cols, xp_shape, (pt, pb, pl, pr, oh, ow), x_shape = self._cache
        b, h, w, cin = x_shape
        kh, kw = self.kernel_size
        sh, sw = self.stride
        dh, dw = self.dilation
        dmat = delta.reshape(b * oh * ow, self.filters)
        wmat = self.params["W"].reshape(kh * kw * cin, self.filters)
        self.grads = {
            "W": (cols.T @ dmat).reshape(self.params["W"].shape),
            "b": np.sum(dmat, axis=0),
        }
        dcols = (dmat @ wmat.T).reshape(b, oh, ow, kh, kw, cin)
        dxp = np.zeros(xp_shape)
        for ki in range(kh):
            i0 = ki * dh
            for kj in range(kw):
                j0 = kj * dw
                dxp[:, i0 : i0 + sh * oh : sh, j0 : j0 + sw * ow : sw, :] += dcols[
                    :, :, :, ki, kj, :
                ]
        return dxp[:, pt : pt + h, pl : pl + w, :]

    def hyper(self):
        return {
            "filters": self.filters,
            "kernel_size": list(self.kernel_size),
            "stride": list(self.stride),
            "padding": self.padding,
            "dilation": list(self.dilation),
            "activation": self.activation.name,
        }

    @property
    def preactivation(self):
        return self._pre


class Pool2D(Layer):
    """Max or average pooling. Stride defaults to the pool size. Max
    routes each upstream value to the first maximum of its window in
    row-major scan order; average spreads it uniformly."""

    kind = "pool2d"

    def __init__(self, pool_size, stride=None, mode="max"):
        super().__init__()
        if mode not in ("max", "avg"):
            raise ValueError("pool mode must be max or avg, got %r" % (mode,))
        self.pool_size = _pair(pool_size)
        self.stride = _pair(stride) if stride is not None else self.pool_size
        self.mode = mode

    def build(self, input_shape, rng):
        if len(input_shape) != 3:
            raise ValueError(
                "pool2d expects [height, width, channels] input, got %s"
                % (input_shape,)
            )
        super().build(input_shape, rng)

    def out_shape(self, input_shape):
        h, w, c = input_shape
        ph, pw = self.pool_size
        sh, sw = self.stride
        return (
            conv_output_size(h, ph, sh, 0, 0),
            conv_output_size(w, pw, sw, 0, 0),
            c,
        )

    def _windows(self, x, oh, ow):
        b, h, w, c = x.shape
        ph, pw = self.pool_size
        sh, sw = self.stride
        win = np.empty((b, oh, ow, ph * pw, c))
        for pi in range(ph):
            for pj in range(pw):
                win[:, :, :, pi * pw + pj, :] = x[
                    :, pi : pi + sh * oh : sh, pj : pj + sw * ow : sw, :
                ]
        return win

    def forward(self, x, train=False):
        x = np.asarray(x, dtype=np.float64)
        self._check_input(x)
        oh, ow, _ = self.out_shape(x.shape[1:])
        win = self._windows(x, oh, ow)
        self._x_shape = x.shape
        self._geom = (oh, ow)
        if self.mode == "max":
            self._arg = np.argmax(win, axis=3)  # first max wins ties
            return np.max(win, axis=3)
        return np.mean(win, axis=3)

    def backward(self, upstream, preact=False):
        oh, ow = self._geom
        ph, pw = self.pool_size
        sh, sw = self.stride
        dx = np.zeros(self._x_shape)
        if self.mode == "max":
            for cell in range(ph * pw):
                mask = (self._arg == cell).astype(np.float64)
                pi, pj = divmod(cell, pw)
                dx[:, pi : pi + sh * oh : sh, pj : pj + sw * ow : sw, :] += (
                    upstream * mask
                )
        else:
            share = upstream / (ph * pw)
            for cell in range(ph * pw):
                pi, pj = divmod(cell, pw)
                dx[:, pi : pi + sh * oh : sh, pj : pj + sw * ow : sw, :] += share
        return dx

    def hyper(self):
        return {
            "pool_size": list(self.pool_size),
            "stride": list(self.stride),
            "mode": self.mode,
        }
