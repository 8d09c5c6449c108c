"""Two small differentiable classifiers used as white-box attack targets.

Architecture ``a``: conv3x3-relu-maxpool2-conv3x3-relu-maxpool2-fc.
Architecture ``b``: fc-relu-fc.

Inputs are raw code values in [0, 255] shaped (H, W, C) or (N, H, W, C);
the forward pass divides by 255 before the first layer, so every gradient
returned here is with respect to raw pixel values.
"""

import numpy as np

from . import layers

ARCHITECTURES = ("a", "b")
PIXEL_SCALE = 255.0


def init_params(arch, input_shape, num_classes, rng, width=None):
    h, w, c = input_shape
    if h % 8 or w % 8:
        raise ValueError(f"input dimensions {h}x{w} are not multiples of 8")
    arch = arch.lower()
    if arch == "a":
        c1, c2 = width or (8, 16)
        d = c2 * (h // 4) * (w // 4)
        return {
            "conv1_w": rng.normal(0, np.sqrt(2.0 / (9 * c)), (c1, c, 3, 3)),
            "conv1_b": np.zeros(c1),
            "conv2_w": rng.normal(0, np.sqrt(2.0 / (9 * c1)), (c2, c1, 3, 3)),
            "conv2_b": np.zeros(c2),
            "fc_w": rng.normal(0, np.sqrt(1.0 / d), (d, num_classes)),
            "fc_b": np.zeros(num_classes),
        }
    if arch == "b":
        hidden = width or 64
        d = h * w * c
        return {
            "fc1_w": rng.normal(0, np.sqrt(2.0 / d), (d, hidden)),
            "fc1_b": np.zeros(hidden),
            "fc2_w": rng.normal(0, np.sqrt(1.0 / hidden), (hidden, num_classes)),
            "fc2_b": np.zeros(num_classes),
        }
    raise ValueError(f"unknown architecture {arch!r}; expected one of {ARCHITECTURES}")


class Classifier:
    def __init__(self, arch, params, num_classes, input_shape):
        self.arch = arch.lower()
        if self.arch not in ARCHITECTURES:
            raise ValueError(f"unknown architecture {arch!r}")
        self.params = {k: np.asarray(v, dtype=np.float64) for k, v in params.items()}
        self.num_classes = int(num_classes)
        self.input_shape = tuple(int(s) for s in input_shape)

    @classmethod
    def initialize(cls, arch, input_shape, num_classes, seed=0, width=None):
        rng = np.random.default_rng(seed)
        params = init_params(arch, input_shape, num_classes, rng, width)
        return cls(arch, params, num_classes, input_shape)

    def _batch(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 2:
            x = x[:, :, None]
        single = x.ndim == 3
        if single:
            x = x[None]
        if x.shape[1:] != self.input_shape:
            raise ValueError(f"input shape {x.shape[1:]} does not match {self.input_shape}")
        return x, single

    def forward(self, xb):
        """Batched forward pass on (N, H, W, C); returns (logits, cache)."""
        p = self.params
        z0 = xb.transpose(0, 3, 1, 2) / PIXEL_SCALE - 0.5
        if self.arch == "a":
            a1 = layers.conv_forward(z0, p["conv1_w"], p["conv1_b"])
            h1, i1 = layers.pool_forward(layers.relu_forward(a1))
            a2 = layers.conv_forward(h1, p["conv2_w"], p["conv2_b"])
            h2, i2 = layers.pool_forward(layers.relu_forward(a2))
            flat = h2.reshape(len(h2), -1)
            logits = flat @ p["fc_w"] + p["fc_b"]
            cache = (z0, a1, i1, h1, a2, i2, h2, flat)
        else:
            flat = xb.reshape(len(xb), -1) / PIXEL_SCALE - 0.5
            a1 = flat @ p["fc1_w"] + p["fc1_b"]
            h1 = layers.relu_forward(a1)
            logits = h1 @ p["fc2_w"] + p["fc2_b"]
            cache = (flat, a1, h1)
        return logits, cache

    def backward(self, cache, glogits, need_params=True):
        """Backpropagate ``glogits`` (N, K); returns (param grads or None, input grad)."""
        p = self.params
        grads = {}
        if self.arch == "a":
            z0, a1, i1, h1, a2, i2, h2, flat = cache
            if need_params:
                grads["fc_w"] = flat.T @ glogits
                grads["fc_b"] = glogits.sum(axis=0)
            g = (glogits @ p["fc_w"].T).reshape(h2.shape)
            g = layers.relu_backward(layers.pool_backward(g, i2), a2)
            g, gw, gb = layers.conv_backward(g, h1, p["conv2_w"], need_params)
            grads["conv2_w"], grads["conv2_b"] = gw, gb
            g = layers.relu_backward(layers.pool_backward(g, i1), a1)
            g, gw, gb = layers.conv_backward(g, z0, p["conv1_w"], need_params)
            grads["conv1_w"], grads["conv1_b"] = gw, gb
            gx = g.transpose(0, 2, 3, 1)
        else:
            flat, a1, h1 = cache
            if need_params:
                grads["fc2_w"] = h1.T @ glogits
                grads["fc2_b"] = glogits.sum(axis=0)
            g = layers.relu_backward(glogits @ p["fc2_w"].T, a1)
            if need_params:
                grads["fc1_w"] = flat.T @ g
                grads["fc1_b"] = g.sum(axis=0)
            gx = (g @ p["fc1_w"].T).reshape((len(g),) + self.input_shape)
        return (grads if need_params else None), gx / PIXEL_SCALE

    def logits(self, x, batch_size=256):
        xb, single = self._batch(x)
        out = np.concatenate(
            [self.forward(xb[i:i + batch_size])[0] for i in range(0, len(xb), batch_size)]
        ) if len(xb) else np.zeros((0, self.num_classes))
        return out[0] if single else out

    def jacobian(self, img):
        """Logits and d(logit_j)/d(pixel) for all classes, shape (K, H, W, C)."""
        xb, _ = self._batch(img)
        if len(xb) != 1:
            raise ValueError("jacobian expects a single image")
        k = self.num_classes
        logits, cache = self.forward(np.repeat(xb, k, axis=0))
        _, gx = self.backward(cache, np.eye(k), need_params=False)
        return logits[0], gx


def predict(c, img):
    """Top-1 label (lowest index on ties) and its softmax probability."""
    z = c.logits(img)
    if z.ndim != 1:
        raise ValueError("predict expects a single image")
    label = int(np.argmax(z))
    return label, float(layers.softmax(z)[label])


def predict_labels(c, images, batch_size=256):
    return np.argmax(c.logits(images, batch_size=batch_size), axis=-1)


def input_gradient(c, img, target):
    """Gradient w.r.t. raw pixels of a scalar loss of the logits.

    ``target`` is one of ``("xent", label)``, ``("logit", j)`` or
    ``("logit_diff", j, k)`` (logit_j - logit_k).
    """
    xb, _ = c._batch(img)
    if len(xb) != 1:
        raise ValueError("input_gradient expects a single image")
    logits, cache = c.forward(xb)
    g = np.zeros_like(logits)
    kind = target[0]
    if kind == "xent":
        _, g = layers.cross_entropy(logits, np.array([target[1]]))
    elif kind == "logit":
        g[0, target[1]] = 1.0
    elif kind == "logit_diff":
        g[0, target[1]] += 1.0
        g[0, target[2]] -= 1.0
    else:
        raise ValueError(f"unknown target {target!r}")
    _, gx = c.backward(cache, g, need_params=False)
    return gx[0]
