"""Orthonormal type-II DCT on non-overlapping 8x8 blocks.

Images are float arrays of shape (H, W) or (H, W, C) with H and W
multiples of 8. A block with spatial samples x(n1, n2) is vectorized
row-major (s = 8*n1 + n2) and mapped to its frequency response with
``X_v = C.T @ x_v`` where frequency index b = 8*k1 + k2.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

BLOCK = 8


def _dct_scale(k, n=BLOCK):
    return np.sqrt(1.0 / n) if k == 0 else np.sqrt(2.0 / n)


def dct_basis_1d(n=BLOCK):
    """Return the n x n matrix c(n_i, k_i) = scale(k_i) cos(pi (2 n_i + 1) k_i / 2n)."""
    idx = np.arange(n)
    basis = np.cos(np.pi * (2 * idx[:, None] + 1) * idx[None, :] / (2 * n))
    return basis * np.array([_dct_scale(k, n) for k in range(n)])[None, :]


@lru_cache(maxsize=None)
def _dct_matrix():
    c1 = dct_basis_1d()
    # c(s, b) = c1(n1, k1) c2(n2, k2) with s = 8 n1 + n2, b = 8 k1 + k2
    mat = np.einsum("ac,bd->abcd", c1, c1).reshape(BLOCK * BLOCK, BLOCK * BLOCK)
    mat.setflags(write=False)
    return mat


def build_dct_matrix():
    """The 64x64 coefficient matrix C, rows indexed by space and columns by frequency."""
    return _dct_matrix()


@dataclass(frozen=True)
class DctStack:
    """Per-channel stack of vectorized block spectra.

    ``blocks`` has shape (channels, num_blocks, 64); blocks are ordered
    row-major over ``grid`` = (block_rows, block_cols).
    """

    blocks: np.ndarray
    grid: tuple

    def __post_init__(self):
        if self.blocks.ndim != 3 or self.blocks.shape[2] != BLOCK * BLOCK:
            raise ValueError(f"blocks must have shape (C, num_blocks, 64), got {self.blocks.shape}")
        rows, cols = self.grid
        if rows * cols != self.blocks.shape[1]:
            raise ValueError(
                f"block count {self.blocks.shape[1]} inconsistent with grid {rows}x{cols}"
            )

    @property
    def channels(self):
        return self.blocks.shape[0]

    @property
    def image_shape(self):
        rows, cols = self.grid
        return (rows * BLOCK, cols * BLOCK, self.channels)

    def coefficient(self, k1, k2):
        """All values of frequency (k1, k2), shape (channels, num_blocks)."""
        return self.blocks[:, :, BLOCK * k1 + k2]

    def as_blocks(self):
        """View as (channels, rows, cols, 8, 8) indexed by (k1, k2) last."""
        rows, cols = self.grid
        return self.blocks.reshape(self.channels, rows, cols, BLOCK, BLOCK)


def check_image(img):
    """Validate an image tensor and return it as float64 (H, W, C)."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise ValueError(f"image must be 2-D or 3-D, got shape {arr.shape}")
    h, w, _ = arr.shape
    if h % BLOCK or w % BLOCK:
        raise ValueError(f"image dimensions {h}x{w} are not multiples of {BLOCK}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("image contains non-finite values")
    return arr


def _to_vectors(img):
    h, w, c = img.shape
    rows, cols = h // BLOCK, w // BLOCK
    tiles = img.reshape(rows, BLOCK, cols, BLOCK, c).transpose(4, 0, 2, 1, 3)
    return tiles.reshape(c, rows * cols, BLOCK * BLOCK), (rows, cols)


def forward_dct(img):
    """Block DCT of every channel of ``img``; returns a DctStack."""
    arr = check_image(img)
    vecs, grid = _to_vectors(arr)
    return DctStack(vecs @ build_dct_matrix(), grid)


def inverse_dct(stack):
    """Inverse block DCT back to an (H, W, C) image. No range clamping."""
    rows, cols = stack.grid
    vecs = stack.blocks @ build_dct_matrix().T
    c = stack.channels
    tiles = vecs.reshape(c, rows, cols, BLOCK, BLOCK).transpose(1, 3, 2, 4, 0)
    return tiles.reshape(rows * BLOCK, cols * BLOCK, c)


def dct2_summation(block):
    """Direct double-sum DCT of one 8x8 block, for cross-checking the matrix path."""
    block = np.asarray(block, dtype=np.float64)
    if block.shape != (BLOCK, BLOCK):
        raise ValueError(f"expected an 8x8 block, got {block.shape}")
    out = np.zeros((BLOCK, BLOCK))
    for k1 in range(BLOCK):
        for k2 in range(BLOCK):
            acc = 0.0
            for n1 in range(BLOCK):
                for n2 in range(BLOCK):
                    acc += (
                        block[n1, n2]
                        * _dct_scale(k1) * np.cos(np.pi * (2 * n1 + 1) * k1 / (2 * BLOCK))
                        * _dct_scale(k2) * np.cos(np.pi * (2 * n2 + 1) * k2 / (2 * BLOCK))
                    )
            out[k1, k2] = acc
    return out
