"""Standalone writers for the LMK CSV and LIMG formats.

These mirror the wire contract documented in the alignment toolkit's
``docs/formats.md``; keeping them dependency-free here means this package
talks to the toolkit through files only.
"""

from __future__ import annotations

import os
import struct

import numpy as np

N_LIP_POINTS = 20

LMK_HEADER = "frame,t_ms," + ",".join(f"x{i},y{i}" for i in range(1, N_LIP_POINTS + 1))


def write_lmk_csv(path, times_ms, lip_points) -> None:
    """Write a landmark track: one row per frame, 20 (x, y) points each."""
    lines = [LMK_HEADER]
    for i, (t_ms, pts) in enumerate(zip(times_ms, lip_points)):
        pts = np.asarray(pts, dtype=np.float64)
        if pts.shape != (N_LIP_POINTS, 2):
            raise ValueError(f"frame {i}: expected {N_LIP_POINTS} points, got {pts.shape}")
        coords = ",".join(repr(float(v)) for v in pts.reshape(-1))
        lines.append(f"{i},{float(t_ms)!r},{coords}")
    _atomic_write(path, ("\n".join(lines) + "\n").encode("utf-8"))


def write_limg(path, frames) -> None:
    """Write a grayscale image stack: LIM1 header + N*H*W uint8 payload."""
    frames = np.asarray(frames)
    if frames.dtype != np.uint8 or frames.ndim != 3:
        raise ValueError(f"expected N x H x W uint8 frames, got {frames.dtype} {frames.shape}")
    n, h, w = frames.shape
    header = struct.pack("<4sIIII", b"LIM1", n, h, w, 1)
    _atomic_write(path, header + np.ascontiguousarray(frames).tobytes())


def _atomic_write(path, data: bytes) -> None:
    path = os.fspath(path)
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as handle:
        handle.write(data)
    os.replace(tmp, path)
