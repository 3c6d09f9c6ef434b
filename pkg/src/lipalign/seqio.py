"""Readers and writers for every corpus artifact.

Formats (all little-endian, all documented with hex examples in
``docs/formats.md``):

* FSEQ  -- feature matrix: ``"FSQ1"``, u32 T, u32 D, f64 frame_period_ms,
  then T*D float32 row-major.
* LIMG  -- grayscale lip image stack: ``"LIM1"``, u32 N, u32 H, u32 W,
  u32 channels (must be 1), then N*H*W uint8.
* LMK   -- lip landmark track: UTF-8 CSV, header
  ``frame,t_ms,x1,y1,...,x20,y20``.
* LAB   -- boundary labels: UTF-8 TSV lines ``start_ms<TAB>end_ms<TAB>label``.
* PATH  -- alignment path: UTF-8 CSV, header ``src,tgt``.
* Manifest -- UTF-8 TSV lines ``id<TAB>role:path ...``.

Binary round-trips are bit-exact; text round-trips are value-exact
(floats serialized with shortest round-tripping repr).
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadMagic,
    FormatViolation,
    InvalidPath,
    InvertedSegment,
    NonFiniteValue,
    NonMonotoneTime,
    OverlappingSegments,
    TruncatedFile,
    WrongColumnCount,
)

FEATURE_KINDS = ("mcep", "f0", "ap", "other")

MANIFEST_ROLES = (
    "src_mcep", "tgt_mcep",
    "src_f0", "tgt_f0",
    "src_lmk", "tgt_lmk",
    "src_limg", "tgt_limg",
    "src_lab", "tgt_lab",
)

N_LIP_POINTS = 20

_FSEQ_MAGIC = b"FSQ1"
_LIMG_MAGIC = b"LIM1"
_FSEQ_HEADER = struct.Struct("<4sIId")
_LIMG_HEADER = struct.Struct("<4sIIII")


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass
class FeatureSequence:
    """T x D matrix of per-frame features with its frame period."""

    frames: np.ndarray
    frame_period_ms: float
    feature_kind: str = "other"

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float32)
        if frames.ndim != 2:
            raise ValueError(f"frames must be 2-D, got shape {frames.shape}")
        if frames.shape[1] < 1:
            raise ValueError("feature dimension must be >= 1")
        if not np.all(np.isfinite(frames)):
            raise ValueError("frames contain non-finite values")
        if not (np.isfinite(self.frame_period_ms) and self.frame_period_ms > 0):
            raise ValueError("frame_period_ms must be finite and > 0")
        if self.feature_kind not in FEATURE_KINDS:
            raise ValueError(f"unknown feature kind {self.feature_kind!r}")
        self.frames = frames

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def dim(self) -> int:
        return self.frames.shape[1]


@dataclass
class LandmarkFrame:
    """One video frame's 20 lip landmarks at time t_ms."""

    t_ms: float
    points: np.ndarray  # (20, 2) float64, pixel coordinates

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.shape != (N_LIP_POINTS, 2):
            raise ValueError(f"expected {N_LIP_POINTS} (x, y) points, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("landmark coordinates must be finite")
        if not (np.isfinite(self.t_ms) and self.t_ms >= 0):
            raise ValueError("t_ms must be finite and >= 0")
        self.points = pts


@dataclass
class LipLandmarkSequence:
    frames: list[LandmarkFrame]
    video_fps: float

    def __post_init__(self):
        if not (np.isfinite(self.video_fps) and self.video_fps > 0):
            raise ValueError("video_fps must be finite and > 0")
        times = [f.t_ms for f in self.frames]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("t_ms must be nondecreasing")

    def __len__(self) -> int:
        return len(self.frames)

    def point_arrays(self) -> list[np.ndarray]:
        return [f.points for f in self.frames]


@dataclass
class LipImageSequence:
    frames: np.ndarray  # (N, H, W) uint8
    video_fps: float

    def __post_init__(self):
        frames = np.asarray(self.frames)
        if frames.dtype != np.uint8:
            raise ValueError("lip images must be uint8")
        if frames.ndim != 3:
            raise ValueError(f"frames must be N x H x W, got shape {frames.shape}")
        if frames.shape[1] < 1 or frames.shape[2] < 1:
            raise ValueError("image height and width must be >= 1")
        if not (np.isfinite(self.video_fps) and self.video_fps > 0):
            raise ValueError("video_fps must be finite and > 0")
        self.frames = frames

    def __len__(self) -> int:
        return self.frames.shape[0]


@dataclass
class BoundarySegmentation:
    """Ordered, non-overlapping labeled time segments in milliseconds."""

    segments: list[tuple[float, float, str]]

    def __post_init__(self):
        segs = sorted(((float(s), float(e), str(l)) for s, e, l in self.segments),
                      key=lambda seg: seg[0])
        for start, end, _ in segs:
            if not (start < end):
                raise InvertedSegment(f"segment [{start}, {end}) has start >= end")
        for (_, e0, _), (s1, _, _) in zip(segs, segs[1:]):
            if s1 < e0:
                raise OverlappingSegments(f"segment starting at {s1} overlaps previous ending at {e0}")
        self.segments = segs

    def __len__(self) -> int:
        return len(self.segments)

    def index_at(self, t_ms: float):
        """Index of the segment containing t_ms (half-open [start, end)), or None."""
        for i, (start, end, _) in enumerate(self.segments):
            if start <= t_ms < end:
                return i
        return None


_STEPS = {(0, 1), (1, 0), (1, 1)}


@dataclass
class AlignmentPath:
    """Monotone (src, tgt) frame index pairs; validated on construction."""

    points: np.ndarray  # (L, 2) int64

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.int64)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 1:
            raise InvalidPath(f"path must be a nonempty L x 2 index array, got shape {pts.shape}")
        if tuple(pts[0]) != (0, 0):
            raise InvalidPath(f"path must start at (0, 0), starts at {tuple(pts[0])}")
        steps = np.diff(pts, axis=0)
        for k, step in enumerate(steps):
            if tuple(step) not in _STEPS:
                raise InvalidPath(
                    f"illegal step {tuple(step)} at path position {k} -> {k + 1}")
        self.points = pts

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def src(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def tgt(self) -> np.ndarray:
        return self.points[:, 1]

    def ends_at(self, n_src: int, n_tgt: int) -> bool:
        return tuple(self.points[-1]) == (n_src - 1, n_tgt - 1)


@dataclass
class ManifestEntry:
    utterance_id: str
    paths: dict  # role -> absolute path string


@dataclass
class PairManifest:
    entries: list[ManifestEntry] = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for entry in self.entries:
            if entry.utterance_id in seen:
                raise FormatViolation(f"duplicate utterance id {entry.utterance_id!r}")
            seen.add(entry.utterance_id)
            for role in entry.paths:
                if role not in MANIFEST_ROLES:
                    raise FormatViolation(
                        f"unknown manifest role {role!r} for {entry.utterance_id!r}")

    def __len__(self) -> int:
        return len(self.entries)

    def ids(self) -> list[str]:
        return [e.utterance_id for e in self.entries]


# ---------------------------------------------------------------------------
# FSEQ
# ---------------------------------------------------------------------------

def read_feature_sequence(path, kind: str = "other") -> FeatureSequence:
    """Read an FSEQ file. ``kind`` tags the result; it is not stored on disk."""
    data = _read_bytes(path)
    if len(data) < _FSEQ_HEADER.size:
        if data[:4] != _FSEQ_MAGIC[: len(data)] or len(data) < 4:
            raise BadMagic("expected magic 'FSQ1'", path=path, where=0)
        raise TruncatedFile(
            f"header needs {_FSEQ_HEADER.size} bytes, file has {len(data)}",
            path=path, where=len(data))
    magic, n_frames, dim, period = _FSEQ_HEADER.unpack_from(data, 0)
    if magic != _FSEQ_MAGIC:
        raise BadMagic(f"expected magic 'FSQ1', found {magic!r}", path=path, where=0)
    if dim < 1:
        raise FormatViolation("feature dimension must be >= 1", path=path, where=8)
    if not (np.isfinite(period) and period > 0):
        raise NonFiniteValue("frame_period_ms must be finite and > 0", path=path, where=12)
    expected = _FSEQ_HEADER.size + 4 * n_frames * dim
    if len(data) < expected:
        raise TruncatedFile(
            f"declared {n_frames}x{dim} float32 payload needs {expected} bytes, file has {len(data)}",
            path=path, where=len(data))
    flat = np.frombuffer(data, dtype="<f4", count=n_frames * dim, offset=_FSEQ_HEADER.size)
    bad = np.flatnonzero(~np.isfinite(flat))
    if bad.size:
        raise NonFiniteValue(
            "non-finite feature value", path=path, where=_FSEQ_HEADER.size + 4 * int(bad[0]))
    frames = flat.reshape(n_frames, dim).copy()
    return FeatureSequence(frames=frames, frame_period_ms=period, feature_kind=kind)


def write_feature_sequence(path, seq: FeatureSequence) -> None:
    header = _FSEQ_HEADER.pack(_FSEQ_MAGIC, seq.n_frames, seq.dim, seq.frame_period_ms)
    payload = np.ascontiguousarray(seq.frames, dtype="<f4").tobytes()
    _write_bytes(path, header + payload)


# ---------------------------------------------------------------------------
# LIMG
# ---------------------------------------------------------------------------

def read_lip_images(path, video_fps: float = 20.0) -> LipImageSequence:
    """Read an LIMG stack. fps is caller metadata, not stored on disk."""
    data = _read_bytes(path)
    if len(data) < _LIMG_HEADER.size:
        if data[:4] != _LIMG_MAGIC[: len(data)] or len(data) < 4:
            raise BadMagic("expected magic 'LIM1'", path=path, where=0)
        raise TruncatedFile(
            f"header needs {_LIMG_HEADER.size} bytes, file has {len(data)}",
            path=path, where=len(data))
    magic, n, height, width, channels = _LIMG_HEADER.unpack_from(data, 0)
    if magic != _LIMG_MAGIC:
        raise BadMagic(f"expected magic 'LIM1', found {magic!r}", path=path, where=0)
    if channels != 1:
        raise FormatViolation(f"channels must be 1, got {channels}", path=path, where=16)
    if height < 1 or width < 1:
        raise FormatViolation("image height and width must be >= 1", path=path, where=8)
    expected = _LIMG_HEADER.size + n * height * width
    if len(data) < expected:
        raise TruncatedFile(
            f"declared {n}x{height}x{width} uint8 payload needs {expected} bytes, file has {len(data)}",
            path=path, where=len(data))
    frames = np.frombuffer(
        data, dtype=np.uint8, count=n * height * width, offset=_LIMG_HEADER.size,
    ).reshape(n, height, width).copy()
    return LipImageSequence(frames=frames, video_fps=video_fps)


def write_lip_images(path, seq: LipImageSequence) -> None:
    n, height, width = seq.frames.shape
    header = _LIMG_HEADER.pack(_LIMG_MAGIC, n, height, width, 1)
    _write_bytes(path, header + np.ascontiguousarray(seq.frames).tobytes())


# ---------------------------------------------------------------------------
# landmarks CSV
# ---------------------------------------------------------------------------

_LMK_HEADER = "frame,t_ms," + ",".join(f"x{i},y{i}" for i in range(1, N_LIP_POINTS + 1))
_LMK_COLUMNS = 2 + 2 * N_LIP_POINTS


def read_landmarks(path, video_fps: float | None = None) -> LipLandmarkSequence:
    """Read an LMK CSV. If video_fps is None it is inferred from t_ms spacing."""
    lines = _read_text_lines(path)
    if not lines:
        raise WrongColumnCount("missing header line", path=path, where=1)
    if lines[0].strip() != _LMK_HEADER:
        raise WrongColumnCount(
            f"bad header, expected {_LMK_HEADER[:24]}...", path=path, where=1)
    frames = []
    prev_t = -np.inf
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != _LMK_COLUMNS:
            raise WrongColumnCount(
                f"expected {_LMK_COLUMNS} columns, got {len(fields)}", path=path, where=lineno)
        try:
            t_ms = float(fields[1])
            coords = np.array([float(v) for v in fields[2:]], dtype=np.float64)
        except ValueError as exc:
            raise FormatViolation(f"unparseable number: {exc}", path=path, where=lineno) from None
        if not np.all(np.isfinite(coords)) or not np.isfinite(t_ms):
            raise NonFiniteValue("non-finite landmark value", path=path, where=lineno)
        if t_ms < prev_t:
            raise NonMonotoneTime(
                f"t_ms {t_ms} after {prev_t}", path=path, where=lineno)
        prev_t = t_ms
        frames.append(LandmarkFrame(t_ms=t_ms, points=coords.reshape(N_LIP_POINTS, 2)))
    if video_fps is None:
        video_fps = _infer_fps([f.t_ms for f in frames])
    return LipLandmarkSequence(frames=frames, video_fps=video_fps)


def write_landmarks(path, seq: LipLandmarkSequence) -> None:
    lines = [_LMK_HEADER]
    for i, frame in enumerate(seq.frames):
        coords = ",".join(repr(float(v)) for v in frame.points.reshape(-1))
        lines.append(f"{i},{float(frame.t_ms)!r},{coords}")
    _write_bytes(path, ("\n".join(lines) + "\n").encode("utf-8"))


def _infer_fps(times, default: float = 20.0) -> float:
    if len(times) < 2:
        return default
    deltas = np.diff(np.asarray(times, dtype=np.float64))
    step = float(np.median(deltas))
    if step <= 0:
        return default
    return 1000.0 / step


# ---------------------------------------------------------------------------
# boundaries TSV
# ---------------------------------------------------------------------------

def read_boundaries(path) -> BoundarySegmentation:
    lines = _read_text_lines(path)
    segments = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise WrongColumnCount(
                f"expected start<TAB>end<TAB>label, got {len(fields)} fields",
                path=path, where=lineno)
        try:
            start, end = float(fields[0]), float(fields[1])
        except ValueError as exc:
            raise FormatViolation(f"unparseable number: {exc}", path=path, where=lineno) from None
        if not (start < end):
            raise InvertedSegment(
                f"segment [{start}, {end}) has start >= end", path=path, where=lineno)
        segments.append((start, end, fields[2]))
    segments.sort(key=lambda seg: seg[0])
    for (_, e0, _), (s1, _, _) in zip(segments, segments[1:]):
        if s1 < e0:
            raise OverlappingSegments(
                f"segment starting at {s1} overlaps previous ending at {e0}", path=path)
    return BoundarySegmentation(segments=segments)


def write_boundaries(path, seg: BoundarySegmentation) -> None:
    lines = [f"{float(s)!r}\t{float(e)!r}\t{label}" for s, e, label in seg.segments]
    _write_bytes(path, ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8"))


# ---------------------------------------------------------------------------
# path CSV
# ---------------------------------------------------------------------------

def read_path(path) -> AlignmentPath:
    lines = _read_text_lines(path)
    if not lines or lines[0].strip() != "src,tgt":
        raise WrongColumnCount("expected header 'src,tgt'", path=path, where=1)
    points = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != 2:
            raise WrongColumnCount(
                f"expected 2 columns, got {len(fields)}", path=path, where=lineno)
        try:
            points.append((int(fields[0]), int(fields[1])))
        except ValueError as exc:
            raise FormatViolation(f"unparseable index: {exc}", path=path, where=lineno) from None
    return AlignmentPath(points=np.array(points, dtype=np.int64).reshape(-1, 2))


def write_path(path, alignment: AlignmentPath) -> None:
    lines = ["src,tgt"] + [f"{int(i)},{int(j)}" for i, j in alignment.points]
    _write_bytes(path, ("\n".join(lines) + "\n").encode("utf-8"))


# ---------------------------------------------------------------------------
# pair manifest TSV
# ---------------------------------------------------------------------------

def read_manifest(path, check_exists: bool = True) -> PairManifest:
    """Read a manifest; relative file paths resolve against the manifest's directory."""
    base = os.path.dirname(os.path.abspath(path))
    lines = _read_text_lines(path)
    entries = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) < 2:
            raise WrongColumnCount(
                "expected id<TAB>role:path ...", path=path, where=lineno)
        utt_id = fields[0]
        paths = {}
        for item in fields[1:]:
            role, sep, rel = item.partition(":")
            if not sep or not rel:
                raise FormatViolation(
                    f"field {item!r} is not role:path", path=path, where=lineno)
            if role not in MANIFEST_ROLES:
                raise FormatViolation(f"unknown role {role!r}", path=path, where=lineno)
            if role in paths:
                raise FormatViolation(f"duplicate role {role!r}", path=path, where=lineno)
            resolved = rel if os.path.isabs(rel) else os.path.join(base, rel)
            if check_exists and not os.path.exists(resolved):
                raise FormatViolation(
                    f"referenced file does not exist: {resolved}", path=path, where=lineno)
            paths[role] = resolved
        entries.append(ManifestEntry(utterance_id=utt_id, paths=paths))
    return PairManifest(entries=entries)


def write_manifest(path, manifest: PairManifest) -> None:
    lines = []
    for entry in manifest.entries:
        items = [f"{role}:{entry.paths[role]}" for role in sorted(entry.paths)]
        lines.append("\t".join([entry.utterance_id] + items))
    _write_bytes(path, ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8"))


# ---------------------------------------------------------------------------
# low-level helpers
# ---------------------------------------------------------------------------

def _read_bytes(path) -> bytes:
    with open(path, "rb") as handle:
        return handle.read()


def _read_text_lines(path) -> list[str]:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        text = handle.read()
    return text.splitlines()


def _write_bytes(path, data: bytes) -> None:
    """Atomic write: temp file in the target directory, then rename."""
    path = os.fspath(path)
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as handle:
        handle.write(data)
    os.replace(tmp, path)
