"""Command-line front end: video in, LMK + LIMG out, JSON summary on stdout."""

from __future__ import annotations

import argparse
import json
import sys

from .landmarks import default_landmarker
from .pipeline import NoFaceFound, extract
from .video import UndecodableVideo


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lipextract",
        description="Extract lip landmark tracks and lip crops from frontal face video.")
    parser.add_argument("--video", required=True)
    parser.add_argument("--out-lmk", required=True)
    parser.add_argument("--out-limg", required=True)
    parser.add_argument("--fps", type=float, default=20.0,
                        help="output frame rate after resampling")
    parser.add_argument("--margin", type=float, default=0.10,
                        help="lip bounding-box expansion fraction")
    parser.add_argument("--size", default="64x64", help="crop output size HxW")
    parser.add_argument("--predictor", default=None,
                        help="dlib 68-point shape predictor model; omit to use the "
                             "built-in classical frontal-face analyzer")
    args = parser.parse_args(argv)

    try:
        h, w = (int(v) for v in args.size.lower().split("x"))
    except ValueError:
        parser.error(f"--size must look like 64x64, got {args.size!r}")

    try:
        summary = extract(
            args.video, args.out_lmk, args.out_limg,
            target_fps=args.fps, crop_margin=args.margin, size=(h, w),
            landmarker=default_landmarker(args.predictor))
    except (UndecodableVideo, NoFaceFound, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(summary.as_dict(), sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
