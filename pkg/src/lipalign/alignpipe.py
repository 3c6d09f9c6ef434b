"""End-to-end alignment pipelines.

mcep mode runs the iterative refinement loop: DTW under the mcep
distortion metric, joint-vector construction, GMM training, frame-wise
conversion of the source, then re-DTW with the converted source. Lip
modes run a single DTW pass over lip frames and project the path onto
acoustic frames through the frame-rate stacking factor.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import jointgmm
from .dtw import DtwConfig, dtw_align
from .errors import AllSilent, InvalidPath, LengthMismatch, PathOutOfRange
from .framedist import DistanceMetric, DEFAULT_LIP_SIZE
from .seqio import AlignmentPath, FeatureSequence, LipImageSequence, LipLandmarkSequence

MODALITIES = ("mcep", "lip_raw", "lip_landmark")

# c0 is a natural-log amplitude; one c0 unit is 10/ln(10) dB of power.
_C0_TO_DB = 10.0 / math.log(10.0)


@dataclass
class AlignConfig:
    modality: str = "mcep"
    iterations: int = 3
    stack_factor: int = 4
    silence_threshold_db: float = 40.0
    n_mix: int = jointgmm.DEFAULT_MIXTURES
    gmm_max_iters: int = jointgmm.DEFAULT_MAX_ITERS
    gmm_tol: float = jointgmm.DEFAULT_TOL
    seed: int = 0
    band_radius: int | None = None
    include_c0: bool = False
    lip_size: tuple = DEFAULT_LIP_SIZE
    force_iterations: bool = False  # rerun lip DTW per iteration (parity runs)
    retain_cost_matrix: bool = False

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ValueError(f"unknown modality {self.modality!r}")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.stack_factor < 1:
            raise ValueError("stack_factor must be >= 1")


@dataclass
class AlignmentOutput:
    acoustic_path: AlignmentPath
    modality_path: AlignmentPath
    per_iteration_costs: list[float]
    silence_masks: tuple  # (kept src indices, kept tgt indices)
    cost_matrix: np.ndarray | None = field(default=None, compare=False)


# ---------------------------------------------------------------------------
# preprocessing
# ---------------------------------------------------------------------------

def remove_silence(seq: FeatureSequence, threshold_db: float = 40.0):
    """Drop frames whose c0 power sits more than threshold_db below the
    utterance maximum. Returns the trimmed sequence and kept indices."""
    if seq.feature_kind != "mcep":
        raise ValueError(f"silence removal needs mcep features, got {seq.feature_kind!r}")
    if seq.n_frames == 0:
        raise AllSilent("empty sequence")
    power_db = _C0_TO_DB * seq.frames[:, 0].astype(np.float64)
    # drop only frames strictly more than threshold_db below the maximum
    keep = power_db >= power_db.max() - threshold_db
    kept = np.flatnonzero(keep)
    if kept.size == 0:
        raise AllSilent("every frame fell below the silence threshold")
    trimmed = FeatureSequence(
        frames=seq.frames[kept],
        frame_period_ms=seq.frame_period_ms,
        feature_kind=seq.feature_kind,
    )
    return trimmed, [int(i) for i in kept]


def add_deltas(seq: FeatureSequence) -> FeatureSequence:
    """Append delta features: delta_t = 0.5 * (x[t+1] - x[t-1]), edges replicated."""
    if seq.n_frames < 1:
        raise ValueError("cannot extend an empty sequence")
    x = seq.frames.astype(np.float64)
    padded = np.vstack([x[:1], x, x[-1:]])
    delta = 0.5 * (padded[2:] - padded[:-2])
    return FeatureSequence(
        frames=np.hstack([x, delta]),
        frame_period_ms=seq.frame_period_ms,
        feature_kind=seq.feature_kind,
    )


def stack_frames(seq: FeatureSequence, k: int) -> FeatureSequence:
    """Concatenate k consecutive frames; trailing remainder frames are dropped."""
    if k < 1:
        raise ValueError("stack factor must be >= 1")
    if k == 1:
        return seq
    t_out = seq.n_frames // k
    stacked = seq.frames[: t_out * k].reshape(t_out, k * seq.dim)
    return FeatureSequence(
        frames=stacked,
        frame_period_ms=seq.frame_period_ms * k,
        feature_kind=seq.feature_kind,
    )


def expand_path(path: AlignmentPath, k: int, n_src: int, n_tgt: int) -> AlignmentPath:
    """Project a path over stacked/lip frames onto acoustic frames.

    Each point (i, j) expands to (k*i + r, k*j + r) for r = 0..k-1, clipped
    to the acoustic lengths; the result is then repaired into a valid
    acoustic-frame path (anchored endpoints, unit steps).
    """
    if k < 1:
        raise ValueError("stack factor must be >= 1")
    if n_src < 1 or n_tgt < 1:
        raise PathOutOfRange(f"acoustic lengths must be >= 1, got {n_src}, {n_tgt}")
    last_src, last_tgt = int(path.points[-1][0]), int(path.points[-1][1])
    if k * last_src >= n_src or k * last_tgt >= n_tgt:
        raise PathOutOfRange(
            f"path end ({last_src}, {last_tgt}) x{k} exceeds acoustic lengths ({n_src}, {n_tgt})")
    points = []
    prev = (0, 0)
    for i, j in path.points:
        for r in range(k):
            raw = (min(k * int(i) + r, n_src - 1), min(k * int(j) + r, n_tgt - 1))
            # non-diagonal steps re-enter earlier rows/columns of the next
            # block; clamp to keep the expansion monotone
            prev = (max(prev[0], raw[0]), max(prev[1], raw[1]))
            points.append(prev)
    return repair_path(points, n_src, n_tgt)


def repair_path(points, n_src: int, n_tgt: int) -> AlignmentPath:
    """Build a valid AlignmentPath through the given monotone index pairs.

    Deduplicates, anchors (0,0) and (n_src-1, n_tgt-1), and bridges any
    jump larger than one frame with diagonal-first connecting steps.
    """
    for i, j in points:
        if not (0 <= i < n_src and 0 <= j < n_tgt):
            raise PathOutOfRange(f"point ({i}, {j}) outside {n_src} x {n_tgt} grid")
    out = [(0, 0)]
    for point in list(points) + [(n_src - 1, n_tgt - 1)]:
        cur = out[-1]
        if point == cur:
            continue
        if point[0] < cur[0] or point[1] < cur[1]:
            raise InvalidPath(f"non-monotone point {point} after {cur}")
        while cur != point:
            di = 1 if point[0] > cur[0] else 0
            dj = 1 if point[1] > cur[1] else 0
            cur = (cur[0] + di, cur[1] + dj)
            out.append(cur)
    return AlignmentPath(points=np.array(out, dtype=np.int64))


# ---------------------------------------------------------------------------
# pipelines
# ---------------------------------------------------------------------------

def iterative_align(src_mcep: FeatureSequence, tgt_mcep: FeatureSequence,
                    config: AlignConfig | None = None) -> AlignmentOutput:
    """Iteratively refined mcep-mode alignment.

    Each iteration DTW-aligns the current source against the target under
    the mcep distortion metric; between iterations a joint GMM is trained
    on the aligned static+delta pairs and the source statics are replaced
    by their converted counterparts (deltas re-derived)."""
    config = config or AlignConfig()
    if config.modality != "mcep":
        raise ValueError(f"iterative_align needs modality 'mcep', got {config.modality!r}")

    src_clean, src_kept = remove_silence(src_mcep, config.silence_threshold_db)
    tgt_clean, tgt_kept = remove_silence(tgt_mcep, config.silence_threshold_db)
    n_static = src_clean.dim
    src_ext = add_deltas(src_clean)
    tgt_ext = add_deltas(tgt_clean)

    metric = DistanceMetric(kind="mcd", include_c0=config.include_c0)
    dtw_cfg = DtwConfig(band_radius=config.band_radius, retain_cost_matrix=config.retain_cost_matrix)

    current = src_ext
    costs: list[float] = []
    result = None
    for iteration in range(config.iterations):
        result = dtw_align(current.frames, tgt_ext.frames, metric, dtw_cfg)
        costs.append(result.total_cost)
        if iteration == config.iterations - 1:
            break
        rows = np.hstack([
            current.frames[result.path.src].astype(np.float64),
            tgt_ext.frames[result.path.tgt].astype(np.float64),
        ])
        model = jointgmm.fit_em(
            rows,
            n_mix=config.n_mix,
            seed=config.seed,
            max_iters=config.gmm_max_iters,
            tol=config.gmm_tol,
            dx=current.dim,
        )
        converted = jointgmm.convert_sequence(model, current.frames.astype(np.float64))
        statics = FeatureSequence(
            frames=converted[:, :n_static],
            frame_period_ms=current.frame_period_ms,
            feature_kind="mcep",
        )
        current = add_deltas(statics)

    acoustic_points = [(src_kept[i], tgt_kept[j]) for i, j in result.path.points]
    acoustic_path = repair_path(acoustic_points, src_mcep.n_frames, tgt_mcep.n_frames)
    return AlignmentOutput(
        acoustic_path=acoustic_path,
        modality_path=result.path,
        per_iteration_costs=costs,
        silence_masks=(src_kept, tgt_kept),
        cost_matrix=result.cost_matrix,
    )


def lip_align(src_lip, tgt_lip, src_mcep: FeatureSequence, tgt_mcep: FeatureSequence,
              config: AlignConfig) -> AlignmentOutput:
    """Lip-modality alignment: one DTW pass over lip frames, projected onto
    acoustic frames. Converted features never enter the lip distance, so a
    single pass is exact; ``force_iterations`` reruns it for parity checks."""
    if config.modality not in ("lip_raw", "lip_landmark"):
        raise ValueError(f"lip_align needs a lip modality, got {config.modality!r}")

    if config.modality == "lip_raw":
        metric = DistanceMetric(kind="pixel_mse", lip_size=config.lip_size)
        src_items = _image_list(src_lip)
        tgt_items = _image_list(tgt_lip)
    else:
        metric = DistanceMetric(kind="landmark")
        src_items = src_lip.point_arrays() if isinstance(src_lip, LipLandmarkSequence) else list(src_lip)
        tgt_items = tgt_lip.point_arrays() if isinstance(tgt_lip, LipLandmarkSequence) else list(tgt_lip)

    k = config.stack_factor
    src_items = _clip_to_stacked(src_items, src_mcep.n_frames, k, "source")
    tgt_items = _clip_to_stacked(tgt_items, tgt_mcep.n_frames, k, "target")

    dtw_cfg = DtwConfig(band_radius=config.band_radius, retain_cost_matrix=config.retain_cost_matrix)
    passes = config.iterations if config.force_iterations else 1
    costs: list[float] = []
    result = None
    for _ in range(passes):
        result = dtw_align(src_items, tgt_items, metric, dtw_cfg)
        costs.append(result.total_cost)

    acoustic_path = expand_path(result.path, k, src_mcep.n_frames, tgt_mcep.n_frames)
    return AlignmentOutput(
        acoustic_path=acoustic_path,
        modality_path=result.path,
        per_iteration_costs=costs,
        silence_masks=(list(range(src_mcep.n_frames)), list(range(tgt_mcep.n_frames))),
        cost_matrix=result.cost_matrix,
    )


def _image_list(seq) -> list[np.ndarray]:
    if isinstance(seq, LipImageSequence):
        return [seq.frames[i] for i in range(len(seq))]
    return list(seq)


def _clip_to_stacked(items, n_acoustic: int, k: int, side: str):
    expected = n_acoustic // k
    if abs(len(items) - expected) > 1:
        raise LengthMismatch(
            f"{side}: {len(items)} lip frames vs {expected} stacked acoustic frames "
            f"({n_acoustic} / {k}); deviation exceeds 1")
    if len(items) > expected and expected >= 1:
        warnings.warn(
            f"{side}: clipping {len(items) - expected} trailing lip frame(s) to match "
            f"{expected} stacked acoustic frames", stacklevel=3)
        return items[:expected]
    return items
