"""Video decoding and frame-rate resampling.

Resampling arithmetic (used by the frame-count guarantees):
``n_out = floor(n_in * target_fps / source_fps)`` and output frame k reads
source frame ``floor(k * source_fps / target_fps)``.
"""

from __future__ import annotations

import math

import cv2


class UndecodableVideo(Exception):
    """Video cannot be opened or holds no frames."""


def resampled_count(n_in: int, source_fps: float, target_fps: float) -> int:
    return math.floor(n_in * target_fps / source_fps)


def source_index(k: int, source_fps: float, target_fps: float) -> int:
    return math.floor(k * source_fps / target_fps)


def iter_resampled_frames(video_path, target_fps: float):
    """Yield (k, t_ms, frame_bgr) for each output frame after resampling.

    Frames are decoded once, sequentially; repeated source indices (when
    upsampling) re-yield the cached frame.
    """
    capture = cv2.VideoCapture(str(video_path))
    if not capture.isOpened():
        raise UndecodableVideo(f"cannot open {video_path}")
    source_fps = capture.get(cv2.CAP_PROP_FPS)
    n_in = int(capture.get(cv2.CAP_PROP_FRAME_COUNT))
    if source_fps <= 0 or n_in <= 0:
        capture.release()
        raise UndecodableVideo(
            f"{video_path}: no usable stream (fps={source_fps}, frames={n_in})")

    n_out = resampled_count(n_in, source_fps, target_fps)
    step_ms = 1000.0 / target_fps
    try:
        current = -1
        frame = None
        for k in range(n_out):
            want = source_index(k, source_fps, target_fps)
            while current < want:
                ok, frame = capture.read()
                if not ok:
                    raise UndecodableVideo(
                        f"{video_path}: stream ended at frame {current + 1}, "
                        f"header declared {n_in}")
                current += 1
            yield k, k * step_ms, frame
    finally:
        capture.release()


def probe(video_path):
    """(source_fps, frame_count) without decoding the stream."""
    capture = cv2.VideoCapture(str(video_path))
    if not capture.isOpened():
        raise UndecodableVideo(f"cannot open {video_path}")
    try:
        return capture.get(cv2.CAP_PROP_FPS), int(capture.get(cv2.CAP_PROP_FRAME_COUNT))
    finally:
        capture.release()
