"""Alignment-quality and conversion-quality metrics.

``correct_ratio`` scores an alignment path against human-labeled
boundaries; ``eval_mcd`` and ``eval_f0rmse`` are the utterance-wise
objective conversion metrics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .alignpipe import remove_silence, repair_path
from .dtw import dtw_align
from .errors import NoVoicedOverlap, PathOutOfRange, SegmentCountMismatch
from .framedist import DistanceMetric
from .seqio import AlignmentPath, BoundarySegmentation, FeatureSequence


def correct_ratio(path: AlignmentPath, src_bounds: BoundarySegmentation,
                  tgt_bounds: BoundarySegmentation, frame_period_ms: float,
                  tgt_frame_period_ms: float | None = None) -> float:
    """Fraction of path points whose frame-center times fall in
    same-index labeled segments on both sides.

    Points outside every labeled segment count as incorrect. Pass
    ``tgt_frame_period_ms`` when the two streams use different periods.
    """
    if len(src_bounds) != len(tgt_bounds):
        raise SegmentCountMismatch(
            f"{len(src_bounds)} source segments vs {len(tgt_bounds)} target segments")
    period_s = float(frame_period_ms)
    period_t = float(tgt_frame_period_ms) if tgt_frame_period_ms is not None else period_s
    correct = 0
    for i, j in path.points:
        si = src_bounds.index_at((int(i) + 0.5) * period_s)
        ti = tgt_bounds.index_at((int(j) + 0.5) * period_t)
        if si is not None and si == ti:
            correct += 1
    return correct / len(path)


def eval_mcd(converted: FeatureSequence, target: FeatureSequence,
             include_c0: bool = False, silence_threshold_db: float = 40.0) -> float:
    """Utterance-wise mel-cepstral distortion in dB.

    Both sequences are silence-trimmed, DTW-aligned under the mcep
    distortion metric, and the mean frame distortion along the path is
    returned."""
    mcd, _ = aligned_mcd(converted, target, include_c0, silence_threshold_db)
    return mcd


def aligned_mcd(converted: FeatureSequence, target: FeatureSequence,
                include_c0: bool = False, silence_threshold_db: float = 40.0):
    """As eval_mcd, but also returns the alignment mapped back to original
    frame indices (for follow-up metrics such as F0RMSE)."""
    conv_clean, conv_kept = remove_silence(converted, silence_threshold_db)
    tgt_clean, tgt_kept = remove_silence(target, silence_threshold_db)
    metric = DistanceMetric(kind="mcd", include_c0=include_c0)
    result = dtw_align(conv_clean.frames, tgt_clean.frames, metric)
    mcd = result.total_cost / len(result.path)
    original = repair_path(
        [(conv_kept[i], tgt_kept[j]) for i, j in result.path.points],
        converted.n_frames, target.n_frames,
    )
    return mcd, original


def eval_f0rmse(converted_f0: FeatureSequence, target_f0: FeatureSequence,
                path: AlignmentPath) -> float:
    """Root mean squared F0 error in Hz over co-voiced path points.

    Unvoiced frames are encoded as 0 and excluded; a pair contributes only
    when both sides are voiced."""
    conv = converted_f0.frames[:, 0].astype(np.float64)
    tgt = target_f0.frames[:, 0].astype(np.float64)
    last_i, last_j = int(path.points[-1][0]), int(path.points[-1][1])
    if last_i >= conv.shape[0] or last_j >= tgt.shape[0]:
        raise PathOutOfRange(
            f"path end ({last_i}, {last_j}) outside F0 lengths ({conv.shape[0]}, {tgt.shape[0]})")
    ci = conv[path.src]
    tj = tgt[path.tgt]
    voiced = (ci > 0) & (tj > 0)
    if not np.any(voiced):
        raise NoVoicedOverlap("no path point is voiced on both sides")
    diff = ci[voiced] - tj[voiced]
    return float(np.sqrt(np.mean(diff * diff)))


@dataclass
class EvalReport:
    """Per-utterance metric rows plus per-metric arithmetic means."""

    rows: list = field(default_factory=list)  # (utterance_id, metric, value)

    def add(self, utterance_id: str, metric: str, value: float) -> None:
        self.rows.append((utterance_id, metric, float(value)))

    def aggregates(self) -> dict:
        sums: dict[str, list] = {}
        for _, metric, value in self.rows:
            sums.setdefault(metric, []).append(value)
        return {metric: float(np.mean(vals)) for metric, vals in sums.items()}

    def to_tsv(self) -> str:
        lines = [f"{uid}\t{metric}\t{value!r}" for uid, metric, value in self.rows]
        aggregates = self.aggregates()
        for metric in sorted(aggregates):
            lines.append(f"AGGREGATE\t{metric}\t{aggregates[metric]!r}")
        return "\n".join(lines) + ("\n" if lines else "")
