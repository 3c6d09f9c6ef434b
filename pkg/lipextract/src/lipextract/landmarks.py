"""Facial landmarking backends.

Both backends produce the standard 68-point annotation; the pipeline only
consumes points 48-67 (the mouth region: 12 outer + 8 inner lip points).

``DlibLandmarker`` wraps dlib's HOG+SVM face detector and 68-point shape
predictor when dlib and a predictor model file are available.

``ClassicalLandmarker`` is a self-contained fallback for frontal footage
(and the synthetic clips used in tests): the face is the largest bright
connected region, the mouth is the largest dark blob in the lower half of
the face, and the lip points are an ellipse fitted from the blob's image
moments. Non-mouth points are coarse geometric estimates from the face
box and are not meant for downstream use.
"""

from __future__ import annotations

import numpy as np

LIP_SLICE = slice(48, 68)

# outer lip ring: 12 points every 30 degrees, starting at the left corner
# and passing over the top of the mouth (image y grows downward)
_OUTER_DEG = np.arange(180.0, 180.0 + 360.0, 30.0)
# inner lip ring: 8 points every 45 degrees, same start
_INNER_DEG = np.arange(180.0, 180.0 + 360.0, 45.0)


def lip_ring(center, semi_w, semi_h, inner_scale=(0.62, 0.48)) -> np.ndarray:
    """Canonical 20-point lip layout around an axis-aligned ellipse."""
    cx, cy = float(center[0]), float(center[1])
    outer_t = np.deg2rad(_OUTER_DEG)
    inner_t = np.deg2rad(_INNER_DEG)
    outer = np.stack([cx + semi_w * np.cos(outer_t), cy + semi_h * np.sin(outer_t)], axis=1)
    inner = np.stack([
        cx + inner_scale[0] * semi_w * np.cos(inner_t),
        cy + inner_scale[1] * semi_h * np.sin(inner_t),
    ], axis=1)
    return np.vstack([outer, inner])


class NoLandmarker(Exception):
    """Requested backend is unavailable."""


class DlibLandmarker:
    """HOG+SVM face detection plus a learned 68-point shape predictor."""

    def __init__(self, predictor_path):
        try:
            import dlib
        except ImportError as exc:
            raise NoLandmarker(f"dlib not importable: {exc}") from None
        self._detector = dlib.get_frontal_face_detector()
        self._predictor = dlib.shape_predictor(str(predictor_path))

    def detect(self, gray: np.ndarray):
        rects = self._detector(gray, 1)
        if not rects:
            return None
        shape = self._predictor(gray, rects[0])
        return np.array([(p.x, p.y) for p in shape.parts()], dtype=np.float64)


class ClassicalLandmarker:
    """Intensity/geometry analyzer for frontal faces.

    min_face_frac: smallest face area accepted, as a fraction of the frame.
    """

    def __init__(self, min_face_frac: float = 0.02):
        self.min_face_frac = min_face_frac

    def detect(self, gray: np.ndarray):
        import cv2

        gray = np.asarray(gray)
        if gray.ndim == 3:
            gray = cv2.cvtColor(gray, cv2.COLOR_BGR2GRAY)

        _, bright = cv2.threshold(gray, 0, 255, cv2.THRESH_BINARY + cv2.THRESH_OTSU)
        n_labels, labels, stats, centroids = cv2.connectedComponentsWithStats(bright)
        if n_labels < 2:
            return None
        areas = stats[1:, cv2.CC_STAT_AREA]
        best = 1 + int(np.argmax(areas))
        if stats[best, cv2.CC_STAT_AREA] < self.min_face_frac * gray.size:
            return None
        x0 = stats[best, cv2.CC_STAT_LEFT]
        y0 = stats[best, cv2.CC_STAT_TOP]
        w = stats[best, cv2.CC_STAT_WIDTH]
        h = stats[best, cv2.CC_STAT_HEIGHT]
        # mouth and eyes are dark holes inside the bright face component;
        # fill them so the face mask covers the whole face region
        face_mask = _fill_holes((labels == best).astype(np.uint8))

        mouth = self._fit_mouth(gray, face_mask, x0, y0, w, h)
        if mouth is None:
            return None
        return self._assemble(x0, y0, w, h, mouth)

    def _fit_mouth(self, gray, face_mask, x0, y0, w, h):
        import cv2

        top = y0 + h // 2
        roi = gray[top : y0 + h, x0 : x0 + w]
        roi_mask = face_mask[top : y0 + h, x0 : x0 + w].astype(bool)
        if roi.size == 0 or not roi_mask.any():
            return None
        skin = np.median(roi[roi_mask])
        dark = ((roi < 0.55 * skin) & roi_mask).astype(np.uint8)
        n_labels, labels, stats, _ = cv2.connectedComponentsWithStats(dark)
        if n_labels < 2:
            return None
        best = 1 + int(np.argmax(stats[1:, cv2.CC_STAT_AREA]))
        if stats[best, cv2.CC_STAT_AREA] < 6:
            return None
        blob = (labels == best).astype(np.uint8)
        moments = cv2.moments(blob, binaryImage=True)
        if moments["m00"] <= 0:
            return None
        cx = moments["m10"] / moments["m00"]
        cy = moments["m01"] / moments["m00"]
        # a filled ellipse has variance = semi_axis^2 / 4 along each axis
        semi_w = 2.0 * np.sqrt(max(moments["mu20"] / moments["m00"], 0.25))
        semi_h = 2.0 * np.sqrt(max(moments["mu02"] / moments["m00"], 0.25))
        return (x0 + cx, top + cy), semi_w, semi_h

    def _assemble(self, x0, y0, w, h, mouth):
        center, semi_w, semi_h = mouth
        points = np.zeros((68, 2), dtype=np.float64)
        cx = x0 + w / 2.0

        jaw_t = np.deg2rad(np.linspace(10.0, 170.0, 17))
        points[0:17, 0] = cx - (w / 2.0) * np.cos(jaw_t)
        points[0:17, 1] = y0 + h * 0.45 + (h * 0.55) * np.sin(jaw_t)

        for base, side in ((17, -1.0), (22, 1.0)):  # brows
            xs = cx + side * np.linspace(0.12, 0.38, 5) * w
            points[base : base + 5, 0] = xs if side > 0 else xs[::-1]
            points[base : base + 5, 1] = y0 + 0.22 * h

        points[27:31, 0] = cx  # nose bridge
        points[27:31, 1] = y0 + np.linspace(0.3, 0.48, 4) * h
        points[31:36, 0] = cx + np.linspace(-0.08, 0.08, 5) * w
        points[31:36, 1] = y0 + 0.55 * h

        for base, side in ((36, -1.0), (42, 1.0)):  # eyes
            eye_cx = cx + side * 0.22 * w
            eye_cy = y0 + 0.35 * h
            t = np.deg2rad(np.arange(180.0, 540.0, 60.0))
            points[base : base + 6, 0] = eye_cx + 0.09 * w * np.cos(t)
            points[base : base + 6, 1] = eye_cy + 0.05 * h * np.sin(t)

        points[LIP_SLICE] = lip_ring(center, semi_w, semi_h)
        return points


def _fill_holes(mask: np.ndarray) -> np.ndarray:
    """Fill enclosed zero regions of a binary mask (flood from the border)."""
    import cv2

    height, width = mask.shape
    border_reach = mask.copy()
    flood_mask = np.zeros((height + 2, width + 2), np.uint8)
    seed = None
    for x in range(width):
        if mask[0, x] == 0:
            seed = (x, 0)
            break
        if mask[height - 1, x] == 0:
            seed = (x, height - 1)
            break
    if seed is None:
        for y in range(height):
            if mask[y, 0] == 0:
                seed = (0, y)
                break
            if mask[y, width - 1] == 0:
                seed = (width - 1, y)
                break
    if seed is None:
        return mask  # mask covers the whole border; nothing to fill
    cv2.floodFill(border_reach, flood_mask, seed, 1)
    holes = (border_reach == 0)
    return (mask.astype(bool) | holes).astype(np.uint8)


def default_landmarker(predictor_path=None):
    """dlib-backed when a shape-predictor model is supplied, else classical.

    dlib cannot run without its learned predictor file, so the model path
    doubles as the backend switch.
    """
    if predictor_path is not None:
        return DlibLandmarker(predictor_path)
    return ClassicalLandmarker()
