"""Deterministic fixed-weight embedding networks.

A model identifier names an architecture whose weights are derived from a
hash of the identifier, so "loading" a model always yields the same
network everywhere: the desk-scale stand-in for a pretrained checkpoint.
Outputs are L2-normalized and quantized to float32, matching the PAF1
value width.
"""
from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["MODEL_REGISTRY", "TinyConvNet", "load_model"]

# identifier -> (input side, conv channels, output dim)
MODEL_REGISTRY: dict[str, tuple[int, tuple[int, int], int]] = {
    "tiny-conv-8": (32, (4, 8), 8),
    "tiny-conv-16": (32, (8, 16), 16),
    "tiny-conv-64": (32, (8, 16), 64),
}


def _seed_from_identifier(identifier: str) -> np.random.Generator:
    digest = hashlib.sha256(identifier.encode("utf-8")).digest()
    return np.random.default_rng(np.frombuffer(digest, dtype=np.uint64))


def _bilinear_resize(img: np.ndarray, side: int) -> np.ndarray:
    """Plain bilinear resample to side x side (align-corners-false style)."""
    h, w = img.shape
    ys = (np.arange(side) + 0.5) * h / side - 0.5
    xs = (np.arange(side) + 0.5) * w / side - 0.5
    y0 = np.clip(np.floor(ys).astype(np.int64), 0, h - 1)
    x0 = np.clip(np.floor(xs).astype(np.int64), 0, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = np.clip(ys - y0, 0.0, 1.0)[:, None]
    wx = np.clip(xs - x0, 0.0, 1.0)[None, :]
    top = img[np.ix_(y0, x0)] * (1 - wx) + img[np.ix_(y0, x1)] * wx
    bot = img[np.ix_(y1, x0)] * (1 - wx) + img[np.ix_(y1, x1)] * wx
    return top * (1 - wy) + bot * wy


def _conv3x3_stride2(x: np.ndarray, kernels: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Valid 3x3 convolution with stride 2; x is (H, W, Cin)."""
    h, w, cin = x.shape
    out_h = (h - 3) // 2 + 1
    out_w = (w - 3) // 2 + 1
    windows = np.lib.stride_tricks.sliding_window_view(x, (3, 3), axis=(0, 1))
    windows = windows[::2, ::2]  # (out_h, out_w, cin, 3, 3)
    out = np.einsum("hwcij,ocij->hwo", windows, kernels,
                    optimize=True) + bias
    return np.maximum(out, 0.0)


class TinyConvNet:
    """Two stride-2 conv layers, global average pooling, a linear head."""

    def __init__(self, identifier: str):
        if identifier not in MODEL_REGISTRY:
            known = ", ".join(sorted(MODEL_REGISTRY))
            raise ValueError(f"unknown model {identifier!r} (known: {known})")
        self.identifier = identifier
        self.input_side, (c1, c2), self.dim = MODEL_REGISTRY[identifier]
        rng = _seed_from_identifier(identifier)
        self.k1 = rng.standard_normal((c1, 1, 3, 3)) * 0.5
        self.b1 = rng.standard_normal(c1) * 0.1
        self.k2 = rng.standard_normal((c2, c1, 3, 3)) * (0.5 / np.sqrt(c1))
        self.b2 = rng.standard_normal(c2) * 0.1
        self.head = rng.standard_normal((self.dim, c2)) / np.sqrt(c2)

    def embed(self, crop: np.ndarray) -> np.ndarray:
        """Embed one grayscale crop; returns a float32-exact unit vector."""
        crop = np.asarray(crop, dtype=np.float64)
        if crop.ndim != 2 or crop.size == 0:
            raise ValueError("crop must be a non-empty 2-D array")
        x = _bilinear_resize(crop, self.input_side)[:, :, None]
        x = _conv3x3_stride2(x, self.k1, self.b1)
        x = _conv3x3_stride2(x, self.k2, self.b2)
        pooled = x.mean(axis=(0, 1))
        out = self.head @ pooled
        norm = np.linalg.norm(out)
        if norm > 0:
            out = out / norm
        return out.astype(np.float32).astype(np.float64)


def load_model(identifier: str) -> TinyConvNet:
    return TinyConvNet(identifier)
