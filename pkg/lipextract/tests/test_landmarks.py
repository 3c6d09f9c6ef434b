import cv2
import numpy as np
import pytest

from lipextract.landmarks import LIP_SLICE, ClassicalLandmarker, lip_ring
from lipextract.synthclip import render_frame


def gray_of(t, jitter=0.0):
    return cv2.cvtColor(render_frame(t, rng_jitter=jitter), cv2.COLOR_BGR2GRAY)


class TestLipRing:
    def test_twenty_points_centered(self):
        pts = lip_ring((100.0, 60.0), 30.0, 10.0)
        assert pts.shape == (20, 2)
        # outer ring alone is angle-symmetric about the center
        assert np.allclose(pts[:12].mean(axis=0), [100.0, 60.0], atol=1e-9)

    def test_extent_matches_axes(self):
        pts = lip_ring((0.0, 0.0), 30.0, 10.0)
        assert pts[:, 0].max() == pytest.approx(30.0)
        assert pts[:, 0].min() == pytest.approx(-30.0)
        assert pts[:, 1].max() == pytest.approx(10.0)
        assert pts[:, 1].min() == pytest.approx(-10.0)

    def test_canonical_extremes(self):
        pts = lip_ring((0.0, 0.0), 30.0, 10.0)
        assert pts[0] == pytest.approx([-30.0, 0.0])   # 48: left corner
        assert pts[3] == pytest.approx([0.0, -10.0])   # 51: top center
        assert pts[6] == pytest.approx([30.0, 0.0])    # 54: right corner
        assert pts[9] == pytest.approx([0.0, 10.0])    # 57: bottom center


class TestClassicalLandmarker:
    def test_returns_68_points(self):
        pts = ClassicalLandmarker().detect(gray_of(0.25))
        assert pts is not None
        assert pts.shape == (68, 2)
        assert np.all(np.isfinite(pts))

    def test_no_face_returns_none(self):
        blank = np.full((240, 320), 25, np.uint8)
        assert ClassicalLandmarker().detect(blank) is None

    def test_tiny_bright_speck_rejected(self):
        img = np.full((240, 320), 25, np.uint8)
        img[10:14, 10:14] = 200
        assert ClassicalLandmarker().detect(img) is None

    def test_lip_points_track_mouth_opening(self):
        # t=0.109 -> sine peak (wide open), t=0.326 -> trough (nearly closed)
        lm = ClassicalLandmarker()
        open_pts = lm.detect(gray_of(0.109))[LIP_SLICE]
        closed_pts = lm.detect(gray_of(0.326))[LIP_SLICE]
        open_height = open_pts[:, 1].max() - open_pts[:, 1].min()
        closed_height = closed_pts[:, 1].max() - closed_pts[:, 1].min()
        assert open_height > 1.5 * closed_height

    def test_lip_points_follow_head_drift(self):
        lm = ClassicalLandmarker()
        a = lm.detect(gray_of(0.0))[LIP_SLICE].mean(axis=0)
        b = lm.detect(gray_of(1.3))[LIP_SLICE].mean(axis=0)
        assert np.linalg.norm(a - b) > 2.0

    def test_robust_to_mild_noise(self):
        pts = ClassicalLandmarker().detect(gray_of(0.5, jitter=3.0))
        assert pts is not None
