"""Synthetic talking-face clip for demos and tests.

Renders a bright face oval on a dark background with eyes, a nose shadow,
and a dark mouth ellipse whose opening oscillates speech-like; the head
drifts slowly. Written as MJPG AVI so it decodes everywhere OpenCV runs.
"""

from __future__ import annotations

import numpy as np


def render_frame(t: float, width: int = 320, height: int = 240,
                 rng_jitter: float = 0.0) -> np.ndarray:
    """One BGR frame at time t seconds."""
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    cx = width / 2.0 + 8.0 * np.sin(2 * np.pi * t / 3.1)
    cy = height / 2.0 + 5.0 * np.cos(2 * np.pi * t / 4.3)

    img = np.full((height, width), 25.0)
    face = ((xx - cx) / (width * 0.28)) ** 2 + ((yy - cy) / (height * 0.42)) ** 2 <= 1.0
    img[face] = 185.0

    for side in (-1.0, 1.0):
        ex = cx + side * width * 0.10
        ey = cy - height * 0.12
        eye = ((xx - ex) / (width * 0.035)) ** 2 + ((yy - ey) / (height * 0.03)) ** 2 <= 1.0
        img[eye & face] = 55.0

    nose = (np.abs(xx - cx) < width * 0.012) & (np.abs(yy - cy) < height * 0.08)
    img[nose & face] = 150.0

    opening = height * (0.035 + 0.028 * (0.5 + 0.5 * np.sin(2 * np.pi * 2.3 * t)))
    mouth_w = width * (0.085 + 0.015 * np.sin(2 * np.pi * 0.9 * t + 1.0))
    my = cy + height * 0.22
    mouth = ((xx - cx) / mouth_w) ** 2 + ((yy - my) / opening) ** 2 <= 1.0
    img[mouth & face] = 35.0

    if rng_jitter > 0.0:
        img += np.random.default_rng(int(t * 1e5)).normal(0, rng_jitter, img.shape)
    img = np.clip(img, 0, 255).astype(np.uint8)
    return np.repeat(img[:, :, None], 3, axis=2)


def write_clip(path, duration_s: float = 2.0, fps: float = 50.0,
               width: int = 320, height: int = 240, jitter: float = 1.5) -> int:
    """Render and encode the clip; returns the frame count."""
    import cv2

    writer = cv2.VideoWriter(
        str(path), cv2.VideoWriter_fourcc(*"MJPG"), fps, (width, height), True)
    if not writer.isOpened():
        raise RuntimeError(f"cannot open video writer for {path}")
    n_frames = int(round(duration_s * fps))
    try:
        for i in range(n_frames):
            writer.write(render_frame(i / fps, width, height, rng_jitter=jitter))
    finally:
        writer.release()
    return n_frames


def main(argv=None) -> int:
    import argparse

    parser = argparse.ArgumentParser(
        prog="python -m lipextract.synthclip",
        description="Render the synthetic talking-face test clip.")
    parser.add_argument("--out", required=True)
    parser.add_argument("--duration", type=float, default=2.0)
    parser.add_argument("--fps", type=float, default=50.0)
    args = parser.parse_args(argv)
    frames = write_clip(args.out, duration_s=args.duration, fps=args.fps)
    print(f"{args.out}\t{frames} frames @ {args.fps} fps")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
