"""Video -> per-frame lip landmarks -> lip bounding-box crops.

For every resampled frame: detect the face, fit the 68 facial landmarks,
keep the 20 lip points (indices 48-67), and crop their bounding box
expanded by a margin; crops are grayscaled and rescaled to one size. On a
detection dropout the previous frame's landmarks are carried forward (and
leading dropouts are backfilled from the first success) so the output
sequences stay dense; every dropout is counted in the summary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import cv2
import numpy as np

from .landmarks import LIP_SLICE, default_landmarker
from .video import UndecodableVideo, iter_resampled_frames, probe, resampled_count
from .writers import write_limg, write_lmk_csv


class NoFaceFound(Exception):
    """No frame in the whole clip produced a detection."""

    def __init__(self, count):
        self.count = count
        super().__init__(f"no face found in any of {count} frames")


@dataclass
class ExtractSummary:
    frames: int = 0
    dropouts: int = 0
    backfilled: int = 0
    source_fps: float = 0.0
    target_fps: float = 0.0
    dropout_frames: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "frames": self.frames,
            "dropouts": self.dropouts,
            "backfilled": self.backfilled,
            "source_fps": self.source_fps,
            "target_fps": self.target_fps,
            "dropout_frames": self.dropout_frames,
        }


def extract(video_path, out_lmk, out_limg, target_fps: float = 20.0,
            crop_margin: float = 0.10, size=(64, 64),
            landmarker=None) -> ExtractSummary:
    """Run the full preprocessor; writes the LMK and LIMG files."""
    landmarker = landmarker or default_landmarker()
    source_fps, n_in = probe(video_path)
    summary = ExtractSummary(source_fps=source_fps, target_fps=target_fps)

    times: list[float] = []
    lip_tracks: list[np.ndarray] = []
    crops: list[np.ndarray] = []
    pending = 0  # leading frames awaiting the first detection
    last_points = None

    for k, t_ms, frame in iter_resampled_frames(video_path, target_fps):
        gray = cv2.cvtColor(frame, cv2.COLOR_BGR2GRAY)
        points = landmarker.detect(gray)
        if points is None:
            summary.dropouts += 1
            summary.dropout_frames.append(k)
            if last_points is None:
                pending += 1
            else:
                points = last_points
        if points is not None:
            if pending:
                summary.backfilled = pending
                for back in range(pending):
                    lip_tracks.append(points[LIP_SLICE].copy())
                    crops.append(_crop_lips(gray, points[LIP_SLICE], crop_margin, size))
                pending = 0
            last_points = points
            lip_tracks.append(points[LIP_SLICE].copy())
            crops.append(_crop_lips(gray, points[LIP_SLICE], crop_margin, size))
        times.append(t_ms)

    summary.frames = len(times)
    if summary.frames == 0:
        raise UndecodableVideo(f"{video_path}: resampling produced no frames")
    if last_points is None:
        raise NoFaceFound(summary.frames)

    write_lmk_csv(out_lmk, times, lip_tracks)
    write_limg(out_limg, np.stack(crops, axis=0))
    return summary


def expected_frames(video_path, target_fps: float = 20.0) -> int:
    source_fps, n_in = probe(video_path)
    return resampled_count(n_in, source_fps, target_fps)


def _crop_lips(gray, lip_points, margin: float, size) -> np.ndarray:
    x0, y0 = lip_points.min(axis=0)
    x1, y1 = lip_points.max(axis=0)
    dx = max((x1 - x0) * margin, 1.0)
    dy = max((y1 - y0) * margin, 1.0)
    height, width = gray.shape[:2]
    c0 = int(np.clip(np.floor(x0 - dx), 0, width - 1))
    c1 = int(np.clip(np.ceil(x1 + dx), c0 + 1, width))
    r0 = int(np.clip(np.floor(y0 - dy), 0, height - 1))
    r1 = int(np.clip(np.ceil(y1 + dy), r0 + 1, height))
    crop = gray[r0:r1, c0:c1]
    return cv2.resize(crop, (int(size[1]), int(size[0])), interpolation=cv2.INTER_LINEAR)
