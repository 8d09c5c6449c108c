"""Hot loops of the toy classifier: 2-D convolution and 2x2 max pooling.

Each kernel has a numba ``@njit`` implementation and a pure-numpy one.
The active backend is chosen once at import time from ``FTUAP_USE_NUMBA``
("0", "false" or "no" selects numpy). When numba cannot be imported the
numpy path is used regardless of the flag.

All arrays are float64 in (N, C, H, W) layout. Convolutions use stride 1
and symmetric zero padding ``pad``.
"""

import os

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

try:
    import numba
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAVE_NUMBA = False


def _flag_enabled(value):
    return value.strip().lower() not in ("0", "false", "no", "off")


USE_NUMBA = HAVE_NUMBA and _flag_enabled(os.environ.get("FTUAP_USE_NUMBA", "1"))
BACKEND = "numba" if USE_NUMBA else "numpy"


def _pad(x, pad):
    if pad == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))


# ---------------------------------------------------------------- numpy path

def conv2d_forward_np(x, w, b, pad):
    kh, kw = w.shape[2:]
    win = sliding_window_view(_pad(x, pad), (kh, kw), axis=(2, 3))
    out = np.tensordot(win, w, axes=([1, 4, 5], [1, 2, 3]))  # (N, H, W, F)
    out += b
    return np.ascontiguousarray(out.transpose(0, 3, 1, 2))


def conv2d_backward_input_np(gout, w, pad):
    kh, kw = w.shape[2:]
    g = _pad(gout, kh - 1 - pad)
    win = sliding_window_view(g, (kh, kw), axis=(2, 3))
    gx = np.tensordot(win, w[:, :, ::-1, ::-1], axes=([1, 4, 5], [0, 2, 3]))
    return np.ascontiguousarray(gx.transpose(0, 3, 1, 2))


def conv2d_backward_weight_np(x, gout, kshape, pad):
    win = sliding_window_view(_pad(x, pad), kshape, axis=(2, 3))
    return np.tensordot(gout, win, axes=([0, 2, 3], [0, 2, 3]))


def maxpool2_forward_np(x):
    n, c, h, w = x.shape
    win = x.reshape(n, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5)
    win = win.reshape(n, c, h // 2, w // 2, 4)
    idx = np.argmax(win, axis=-1)
    out = np.take_along_axis(win, idx[..., None], axis=-1)[..., 0]
    return out, idx


def maxpool2_backward_np(gout, idx):
    n, c, h2, w2 = gout.shape
    g = np.zeros((n, c, h2, w2, 4))
    np.put_along_axis(g, idx[..., None], gout[..., None], axis=-1)
    g = g.reshape(n, c, h2, w2, 2, 2).transpose(0, 1, 2, 4, 3, 5)
    return g.reshape(n, c, 2 * h2, 2 * w2)


# ---------------------------------------------------------------- numba path

if HAVE_NUMBA:

    @njit(cache=True)
    def _conv_fwd_nb(xp, w, b, out):
        n_img, n_in, _, _ = xp.shape
        n_out, _, kh, kw = w.shape
        h, wd = out.shape[2], out.shape[3]
        for n in range(n_img):
            for f in range(n_out):
                out[n, f, :, :] = b[f]
                for c in range(n_in):
                    for u in range(kh):
                        for v in range(kw):
                            wt = w[f, c, u, v]
                            for i in range(h):
                                for j in range(wd):
                                    out[n, f, i, j] += wt * xp[n, c, i + u, j + v]

    @njit(cache=True)
    def _conv_bwd_input_nb(gout, w, gxp):
        n_img, n_out, h, wd = gout.shape
        _, n_in, kh, kw = w.shape
        for n in range(n_img):
            for c in range(n_in):
                for f in range(n_out):
                    for u in range(kh):
                        for v in range(kw):
                            wt = w[f, c, u, v]
                            for i in range(h):
                                for j in range(wd):
                                    gxp[n, c, i + u, j + v] += wt * gout[n, f, i, j]

    # fastmath lets LLVM reassociate the reduction so it vectorizes
    @njit(cache=True, fastmath=True)
    def _conv_bwd_weight_nb(xp, gout, gw):
        n_img, n_out, h, wd = gout.shape
        _, n_in, kh, kw = gw.shape
        for f in range(n_out):
            for c in range(n_in):
                for u in range(kh):
                    for v in range(kw):
                        acc = 0.0
                        for n in range(n_img):
                            for i in range(h):
                                for j in range(wd):
                                    acc += gout[n, f, i, j] * xp[n, c, i + u, j + v]
                        gw[f, c, u, v] = acc

    @njit(cache=True)
    def _pool_fwd_nb(x, out, idx):
        n_img, n_ch, h2, w2 = out.shape
        for n in range(n_img):
            for c in range(n_ch):
                for i in range(h2):
                    for j in range(w2):
                        best = x[n, c, 2 * i, 2 * j]
                        arg = 0
                        for k in range(1, 4):
                            val = x[n, c, 2 * i + k // 2, 2 * j + k % 2]
                            if val > best:
                                best = val
                                arg = k
                        out[n, c, i, j] = best
                        idx[n, c, i, j] = arg

    @njit(cache=True)
    def _pool_bwd_nb(gout, idx, gx):
        n_img, n_ch, h2, w2 = gout.shape
        for n in range(n_img):
            for c in range(n_ch):
                for i in range(h2):
                    for j in range(w2):
                        k = idx[n, c, i, j]
                        gx[n, c, 2 * i + k // 2, 2 * j + k % 2] = gout[n, c, i, j]


def conv2d_forward_nb(x, w, b, pad):
    n, _, h, wd = x.shape
    kh, kw = w.shape[2:]
    out = np.empty((n, w.shape[0], h + 2 * pad - kh + 1, wd + 2 * pad - kw + 1))
    _conv_fwd_nb(np.ascontiguousarray(_pad(x, pad)), np.ascontiguousarray(w), b, out)
    return out


def conv2d_backward_input_nb(gout, w, pad):
    n, _, h, wd = gout.shape
    kh, kw = w.shape[2:]
    gxp = np.zeros((n, w.shape[1], h + kh - 1, wd + kw - 1))
    _conv_bwd_input_nb(np.ascontiguousarray(gout), np.ascontiguousarray(w), gxp)
    if pad:
        gxp = gxp[:, :, pad:-pad, pad:-pad]
    return np.ascontiguousarray(gxp)


def conv2d_backward_weight_nb(x, gout, kshape, pad):
    gw = np.zeros((gout.shape[1], x.shape[1]) + tuple(kshape))
    _conv_bwd_weight_nb(np.ascontiguousarray(_pad(x, pad)), np.ascontiguousarray(gout), gw)
    return gw


def maxpool2_forward_nb(x):
    n, c, h, w = x.shape
    out = np.empty((n, c, h // 2, w // 2))
    idx = np.empty((n, c, h // 2, w // 2), dtype=np.int64)
    _pool_fwd_nb(np.ascontiguousarray(x), out, idx)
    return out, idx


def maxpool2_backward_nb(gout, idx):
    n, c, h2, w2 = gout.shape
    gx = np.zeros((n, c, 2 * h2, 2 * w2))
    _pool_bwd_nb(np.ascontiguousarray(gout), idx, gx)
    return gx


NUMPY_KERNELS = {
    "conv2d_forward": conv2d_forward_np,
    "conv2d_backward_input": conv2d_backward_input_np,
    "conv2d_backward_weight": conv2d_backward_weight_np,
    "maxpool2_forward": maxpool2_forward_np,
    "maxpool2_backward": maxpool2_backward_np,
}

NUMBA_KERNELS = {
    "conv2d_forward": conv2d_forward_nb,
    "conv2d_backward_input": conv2d_backward_input_nb,
    "conv2d_backward_weight": conv2d_backward_weight_nb,
    "maxpool2_forward": maxpool2_forward_nb,
    "maxpool2_backward": maxpool2_backward_nb,
} if HAVE_NUMBA else {}

_active = NUMBA_KERNELS if USE_NUMBA else NUMPY_KERNELS

conv2d_forward = _active["conv2d_forward"]
conv2d_backward_input = _active["conv2d_backward_input"]
conv2d_backward_weight = _active["conv2d_backward_weight"]
maxpool2_forward = _active["maxpool2_forward"]
maxpool2_backward = _active["maxpool2_backward"]
