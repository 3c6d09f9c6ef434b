"""Frame-level distance metrics for the three alignment modalities.

``mcd_frame`` is the dB-scaled spectral distortion between mel-cepstrum
frames, ``pixel_mse`` compares rescaled grayscale lip crops, and
``landmark_distance`` compares centroid-relocated 20-point lip shapes.
All three are symmetric, non-negative, and zero on identical inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyImage, StackSizeMismatch, WrongPointCount
from .seqio import N_LIP_POINTS, LandmarkFrame

# 10/ln(10): converts a natural-log amplitude distance to decibels.
LOG_DB_CONST = 10.0 / math.log(10.0)

DEFAULT_LIP_SIZE = (64, 64)


def mcd_frame(src, tgt, include_c0: bool = False) -> float:
    """Mel-cepstral distortion in dB between two mcep frames.

    The 0th coefficient (energy) is excluded from the sum unless
    ``include_c0`` is set.
    """
    src = np.asarray(src, dtype=np.float64).reshape(-1)
    tgt = np.asarray(tgt, dtype=np.float64).reshape(-1)
    if src.shape != tgt.shape:
        raise DimensionMismatch(f"frame dims differ: {src.shape[0]} vs {tgt.shape[0]}")
    start = 0 if include_c0 else 1
    if src.shape[0] - start < 1:
        raise DimensionMismatch("need at least one summed dimension (D >= 2 without c0)")
    diff = src[start:] - tgt[start:]
    return LOG_DB_CONST * math.sqrt(2.0 * float(np.dot(diff, diff)))


def pixel_mse(a, b, target_size=DEFAULT_LIP_SIZE) -> float:
    """Mean squared intensity error between two lip images.

    Both images are bilinearly rescaled to ``target_size`` before the
    pixel-wise comparison, so inputs may differ in resolution.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise EmptyImage("cannot compare empty images")
    if a.ndim != 2 or b.ndim != 2:
        raise EmptyImage(f"images must be 2-D grayscale, got shapes {a.shape}, {b.shape}")
    h, w = int(target_size[0]), int(target_size[1])
    if h < 1 or w < 1:
        raise EmptyImage(f"target size must be >= 1x1, got {target_size}")
    ra = resize_bilinear(a, h, w)
    rb = resize_bilinear(b, h, w)
    diff = ra - rb
    return float(np.mean(diff * diff))


def landmark_distance(src, tgt) -> float:
    """Sum of per-point Euclidean distances after relocating each 20-point
    lip set so its centroid sits at the origin."""
    ps = _landmark_points(src)
    pt = _landmark_points(tgt)
    diff = (ps - ps.mean(axis=0)) - (pt - pt.mean(axis=0))
    return float(np.sum(np.sqrt(np.sum(diff * diff, axis=1))))


def stacked_distance(metric, src_stack, tgt_stack) -> float:
    """Sum of a per-sub-frame metric over two equally sized frame stacks."""
    if len(src_stack) != len(tgt_stack):
        raise StackSizeMismatch(f"stack sizes differ: {len(src_stack)} vs {len(tgt_stack)}")
    return float(sum(metric(a, b) for a, b in zip(src_stack, tgt_stack)))


def _landmark_points(frame) -> np.ndarray:
    pts = frame.points if isinstance(frame, LandmarkFrame) else np.asarray(frame, dtype=np.float64)
    pts = np.asarray(pts, dtype=np.float64)
    if pts.shape != (N_LIP_POINTS, 2):
        raise WrongPointCount(f"expected {N_LIP_POINTS} (x, y) points, got shape {pts.shape}")
    return pts


def resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear rescale with half-pixel-center sampling, clamped at edges.

    Uses the a + f*(b - a) blend so constant regions pass through exactly.
    """
    in_h, in_w = img.shape
    img = np.asarray(img, dtype=np.float64)
    ys = np.clip((np.arange(out_h) + 0.5) * in_h / out_h - 0.5, 0.0, in_h - 1.0)
    xs = np.clip((np.arange(out_w) + 0.5) * in_w / out_w - 0.5, 0.0, in_w - 1.0)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    top = img[np.ix_(y0, x0)]
    top = top + fx * (img[np.ix_(y0, x1)] - top)
    bot = img[np.ix_(y1, x0)]
    bot = bot + fx * (img[np.ix_(y1, x1)] - bot)
    return top + fy * (bot - top)


@dataclass
class DistanceMetric:
    """Configured frame metric, callable as ``metric(a, b)``.

    kind is one of ``mcd``, ``pixel_mse``, ``landmark``; params are
    metric-specific (``include_c0`` for mcd, ``lip_size`` for pixel_mse).
    """

    kind: str
    include_c0: bool = False
    lip_size: tuple = DEFAULT_LIP_SIZE

    def __post_init__(self):
        if self.kind not in ("mcd", "pixel_mse", "landmark"):
            raise ValueError(f"unknown metric kind {self.kind!r}")
        h, w = self.lip_size
        if h < 1 or w < 1:
            raise ValueError(f"lip size must be >= 1x1, got {self.lip_size}")

    def __call__(self, a, b) -> float:
        if self.kind == "mcd":
            return mcd_frame(a, b, include_c0=self.include_c0)
        if self.kind == "pixel_mse":
            return pixel_mse(a, b, target_size=self.lip_size)
        return landmark_distance(a, b)

    def matrix(self, src_items, tgt_items) -> np.ndarray:
        """All-pairs local cost matrix.

        Row-wise vectorization keeps each entry the exact difference-based
        value, so d(x, x) is exactly 0 -- a Gram-matrix expansion would not
        guarantee that.
        """
        if self.kind == "mcd":
            src = np.asarray([np.asarray(f, dtype=np.float64).reshape(-1) for f in src_items])
            tgt = np.asarray([np.asarray(f, dtype=np.float64).reshape(-1) for f in tgt_items])
            if src.shape[1] != tgt.shape[1]:
                raise DimensionMismatch(f"frame dims differ: {src.shape[1]} vs {tgt.shape[1]}")
            start = 0 if self.include_c0 else 1
            if src.shape[1] - start < 1:
                raise DimensionMismatch("need at least one summed dimension (D >= 2 without c0)")
            s = src[:, start:]
            t = tgt[:, start:]
            out = np.empty((s.shape[0], t.shape[0]))
            for i in range(s.shape[0]):
                diff = t - s[i]
                out[i] = np.sum(diff * diff, axis=1)
            return LOG_DB_CONST * np.sqrt(2.0 * out)
        if self.kind == "landmark":
            src = np.asarray([_landmark_points(f) for f in src_items])
            tgt = np.asarray([_landmark_points(f) for f in tgt_items])
            src = src - src.mean(axis=1, keepdims=True)
            tgt = tgt - tgt.mean(axis=1, keepdims=True)
            out = np.empty((src.shape[0], tgt.shape[0]))
            for i in range(src.shape[0]):
                diff = tgt - src[i]
                out[i] = np.sqrt(np.sum(diff * diff, axis=2)).sum(axis=1)
            return out
        h, w = self.lip_size
        src = np.asarray([resize_bilinear(np.asarray(f, dtype=np.float64), h, w) for f in src_items])
        tgt = np.asarray([resize_bilinear(np.asarray(f, dtype=np.float64), h, w) for f in tgt_items])
        flat_s = src.reshape(len(src_items), -1)
        flat_t = tgt.reshape(len(tgt_items), -1)
        out = np.empty((flat_s.shape[0], flat_t.shape[0]))
        for i in range(flat_s.shape[0]):
            diff = flat_t - flat_s[i]
            out[i] = np.mean(diff * diff, axis=1)
        return out
