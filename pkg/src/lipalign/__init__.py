"""lipalign: multimodal time alignment for electrolaryngeal voice conversion.

Aligns parallel utterance pairs with DTW over acoustic (mel-cepstral)
features or lip representations (raw crops or landmarks), refines acoustic
alignments with an iterative joint-GMM conversion loop, and scores
alignments and conversions with boundary correct-ratio, mel-cepstral
distortion, and F0 RMSE.
"""

from .alignpipe import (
    AlignConfig,
    AlignmentOutput,
    add_deltas,
    expand_path,
    iterative_align,
    lip_align,
    remove_silence,
    repair_path,
    stack_frames,
)
from .dtw import DtwConfig, DtwResult, brute_force_align, dtw_align
from .errors import LipalignError
from .evalkit import EvalReport, correct_ratio, eval_f0rmse, eval_mcd
from .framedist import DistanceMetric, landmark_distance, mcd_frame, pixel_mse, stacked_distance
from .jointgmm import JointGmm, JointVectors, convert_frame, convert_sequence, fit_em, log_likelihood
from .seqio import (
    AlignmentPath,
    BoundarySegmentation,
    FeatureSequence,
    LandmarkFrame,
    LipImageSequence,
    LipLandmarkSequence,
    PairManifest,
)

__version__ = "0.1.0"

__all__ = [
    "AlignConfig",
    "AlignmentOutput",
    "AlignmentPath",
    "BoundarySegmentation",
    "DistanceMetric",
    "DtwConfig",
    "DtwResult",
    "EvalReport",
    "FeatureSequence",
    "JointGmm",
    "JointVectors",
    "LandmarkFrame",
    "LipImageSequence",
    "LipLandmarkSequence",
    "LipalignError",
    "PairManifest",
    "add_deltas",
    "brute_force_align",
    "convert_frame",
    "convert_sequence",
    "correct_ratio",
    "dtw_align",
    "eval_f0rmse",
    "eval_mcd",
    "expand_path",
    "fit_em",
    "iterative_align",
    "landmark_distance",
    "lip_align",
    "log_likelihood",
    "mcd_frame",
    "pixel_mse",
    "remove_silence",
    "repair_path",
    "stack_frames",
    "stacked_distance",
]
