"""Alignment-matrix rendering to binary PPM (P6).

Draws the cumulative DTW cost matrix as a grayscale heatmap (source
frames down the rows, target frames across the columns), the alignment
path as a blue polyline, and labeled boundaries as dashed grey gridlines.
"""

from __future__ import annotations

import numpy as np

from .seqio import AlignmentPath, BoundarySegmentation, _write_bytes

_PATH_COLOR = (0, 64, 255)
_GRID_COLOR = (128, 128, 128)
_DASH_ON, _DASH_OFF = 4, 4


def render_alignment_matrix(
    cost: np.ndarray,
    path: AlignmentPath | None = None,
    src_bounds: BoundarySegmentation | None = None,
    tgt_bounds: BoundarySegmentation | None = None,
    src_period_ms: float | None = None,
    tgt_period_ms: float | None = None,
    scale: int = 1,
) -> np.ndarray:
    """Render to an (H, W, 3) uint8 image, ``scale`` pixels per matrix cell."""
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.size == 0:
        raise ValueError(f"cost matrix must be nonempty 2-D, got shape {cost.shape}")
    if scale < 1:
        raise ValueError("scale must be >= 1")

    finite = cost[np.isfinite(cost)]
    lo = finite.min() if finite.size else 0.0
    hi = finite.max() if finite.size else 1.0
    span = hi - lo if hi > lo else 1.0
    norm = np.clip((cost - lo) / span, 0.0, 1.0)
    norm[~np.isfinite(cost)] = 1.0
    gray = np.round(235.0 * (1.0 - norm) + 20.0).astype(np.uint8)
    img = np.repeat(gray[:, :, None], 3, axis=2)
    img = np.repeat(np.repeat(img, scale, axis=0), scale, axis=1)
    height, width = img.shape[:2]

    if src_bounds is not None and src_period_ms:
        for _, end_ms, _ in src_bounds.segments:
            row = int(end_ms / src_period_ms) * scale
            if 0 <= row < height:
                _dash_row(img, row, _GRID_COLOR)
    if tgt_bounds is not None and tgt_period_ms:
        for _, end_ms, _ in tgt_bounds.segments:
            col = int(end_ms / tgt_period_ms) * scale
            if 0 <= col < width:
                _dash_col(img, col, _GRID_COLOR)

    if path is not None:
        for i, j in path.points:
            r0, c0 = int(i) * scale, int(j) * scale
            img[r0 : r0 + scale, c0 : c0 + scale] = _PATH_COLOR
    return img


def write_ppm(path, img: np.ndarray) -> None:
    img = np.asarray(img, dtype=np.uint8)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"image must be H x W x 3, got shape {img.shape}")
    header = f"P6\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    _write_bytes(path, header + np.ascontiguousarray(img).tobytes())


def _dash_row(img, row, color):
    width = img.shape[1]
    period = _DASH_ON + _DASH_OFF
    mask = (np.arange(width) % period) < _DASH_ON
    img[row, mask] = color


def _dash_col(img, col, color):
    height = img.shape[0]
    period = _DASH_ON + _DASH_OFF
    mask = (np.arange(height) % period) < _DASH_ON
    img[mask, col] = color
