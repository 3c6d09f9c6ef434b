"""Joint-density GMM over concatenated source/target frame vectors.

Full-covariance EM with seeded k-means++ initialization, frame-wise
conditional-expectation conversion, and the LGMM model container format.
All randomness flows through one seeded generator, so identical data and
seed give a bit-identical model.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadMagic,
    DegenerateCovariance,
    DimensionMismatch,
    TooFewSamples,
    TruncatedFile,
)
from .seqio import _read_bytes, _write_bytes

_LGMM_MAGIC = b"LGM1"
_LGMM_HEADER = struct.Struct("<4sIII")

DEFAULT_MIXTURES = 32
DEFAULT_MAX_ITERS = 100
DEFAULT_TOL = 1e-6
DEFAULT_FLOOR = 1e-6


@dataclass
class JointVectors:
    """N x (dx+dy) matrix of aligned, concatenated frame pairs."""

    rows: np.ndarray
    dx: int | None = None

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[0] < 1:
            raise ValueError(f"rows must be a nonempty N x D matrix, got shape {rows.shape}")
        if not np.all(np.isfinite(rows)):
            raise ValueError("joint vectors contain non-finite values")
        if self.dx is not None and not (0 < self.dx < rows.shape[1]):
            raise ValueError(f"dx={self.dx} must split a {rows.shape[1]}-dim row")
        self.rows = rows


@dataclass
class JointGmm:
    weights: np.ndarray       # (M,)
    means: np.ndarray         # (M, dx+dy)
    covariances: np.ndarray   # (M, dx+dy, dx+dy)
    dx: int
    dy: int
    history: list = field(default_factory=list, compare=False)  # per-iteration LL

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.means = np.asarray(self.means, dtype=np.float64)
        self.covariances = np.asarray(self.covariances, dtype=np.float64)
        m = self.weights.shape[0]
        d = self.dx + self.dy
        if self.means.shape != (m, d):
            raise ValueError(f"means shape {self.means.shape} != ({m}, {d})")
        if self.covariances.shape != (m, d, d):
            raise ValueError(f"covariances shape {self.covariances.shape} != ({m}, {d}, {d})")
        if abs(float(self.weights.sum()) - 1.0) > 1e-9 or np.any(self.weights < 0):
            raise ValueError("weights must be nonnegative and sum to 1")

    @property
    def n_mix(self) -> int:
        return self.weights.shape[0]


def fit_em(
    data,
    n_mix: int,
    seed: int = 0,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
    dx: int | None = None,
    floor: float = DEFAULT_FLOOR,
) -> JointGmm:
    """Fit an M-mixture full-covariance GMM by EM.

    Initialization is seeded k-means++ followed by a short Lloyd refinement;
    EM stops after ``max_iters`` or when the per-sample log-likelihood gain
    drops below ``tol``. The fitted model's ``history`` holds the total
    log-likelihood recorded at the start of each EM iteration.
    """
    rows, dx = _rows_and_dx(data, dx)
    n, dim = rows.shape
    if n_mix < 1:
        raise ValueError("n_mix must be >= 1")
    if n < n_mix:
        raise TooFewSamples(f"{n} samples cannot support {n_mix} mixtures")

    rng = np.random.Generator(np.random.PCG64(seed))
    weights, means, covs = _kmeans_init(rows, n_mix, rng, floor)

    history: list[float] = []
    prev_ll = -np.inf
    for _ in range(max_iters):
        log_resp, ll = _e_step(rows, weights, means, covs)
        history.append(ll)
        if ll - prev_ll < tol * n and np.isfinite(prev_ll):
            break
        prev_ll = ll
        resp = np.exp(log_resp)
        weights, means, covs = _m_step(rows, resp, floor)

    return JointGmm(
        weights=weights, means=means, covariances=covs,
        dx=dx, dy=dim - dx, history=history,
    )


def log_likelihood(model: JointGmm, data) -> float:
    """Total log-likelihood of the rows under the model; 0 for empty data."""
    rows = data.rows if isinstance(data, JointVectors) else np.asarray(data, dtype=np.float64)
    if rows.size == 0:
        return 0.0
    rows = np.atleast_2d(rows)
    if rows.shape[1] != model.dx + model.dy:
        raise DimensionMismatch(
            f"data dim {rows.shape[1]} != model joint dim {model.dx + model.dy}")
    _, ll = _e_step(rows, model.weights, model.means, model.covariances)
    return float(ll)


def convert_frame(model: JointGmm, x) -> np.ndarray:
    """Mixture-weighted conditional mean E[y | x] for one source frame."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != model.dx:
        raise DimensionMismatch(f"frame dim {x.shape[0]} != model dx {model.dx}")
    return convert_sequence(model, x[None, :])[0]


def convert_sequence(model: JointGmm, frames) -> np.ndarray:
    """Frame-wise conditional-mean conversion of a (T, dx) matrix."""
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2 or frames.shape[1] != model.dx:
        raise DimensionMismatch(
            f"frames must be T x {model.dx}, got shape {frames.shape}")
    dx = model.dx
    mu_x = model.means[:, :dx]
    mu_y = model.means[:, dx:]
    m = model.n_mix

    log_post = np.empty((frames.shape[0], m))
    cond = np.empty((m, frames.shape[0], model.dy))
    for k in range(m):
        cov_xx = model.covariances[k, :dx, :dx]
        cov_yx = model.covariances[k, dx:, :dx]
        chol = _chol(cov_xx)
        centered = frames - mu_x[k]
        log_post[:, k] = _log_weight(model.weights[k]) + _log_gauss_chol(centered, chol)
        # regression matrix A = cov_yx @ inv(cov_xx), applied as (A x')'
        a_t = np.linalg.solve(cov_xx, cov_yx.T)
        cond[k] = mu_y[k] + centered @ a_t

    log_post -= log_post.max(axis=1, keepdims=True)
    post = np.exp(log_post)
    post /= post.sum(axis=1, keepdims=True)
    out = np.einsum("tm,mtd->td", post, cond)
    if not np.all(np.isfinite(out)):
        raise DegenerateCovariance("conversion produced non-finite values")
    return out


# ---------------------------------------------------------------------------
# EM internals
# ---------------------------------------------------------------------------

def _rows_and_dx(data, dx):
    if isinstance(data, JointVectors):
        rows = data.rows
        dx = dx if dx is not None else data.dx
    else:
        rows = np.asarray(data, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[0] < 1:
            raise ValueError(f"data must be a nonempty N x D matrix, got shape {rows.shape}")
        if not np.all(np.isfinite(rows)):
            raise ValueError("data contains non-finite values")
    if dx is None:
        if rows.shape[1] % 2:
            raise ValueError("dx required for odd joint dimension")
        dx = rows.shape[1] // 2
    if not (0 < dx < rows.shape[1]):
        raise ValueError(f"dx={dx} must split a {rows.shape[1]}-dim row")
    return rows, dx


def _kmeans_init(rows, n_mix, rng, floor):
    n, dim = rows.shape
    centers = np.empty((n_mix, dim))
    centers[0] = rows[rng.integers(n)]
    d2 = np.sum((rows - centers[0]) ** 2, axis=1)
    for k in range(1, n_mix):
        total = d2.sum()
        if total > 0:
            probs = d2 / total
            centers[k] = rows[rng.choice(n, p=probs)]
        else:
            centers[k] = rows[rng.integers(n)]
        d2 = np.minimum(d2, np.sum((rows - centers[k]) ** 2, axis=1))

    assign = np.zeros(n, dtype=np.intp)
    for _ in range(10):
        dists = np.sum((rows[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        new_assign = dists.argmin(axis=1)
        if np.array_equal(new_assign, assign):
            assign = new_assign
            break
        assign = new_assign
        for k in range(n_mix):
            members = rows[assign == k]
            if len(members):
                centers[k] = members.mean(axis=0)

    if n >= 2:
        global_cov = _floored_cov(rows, rows.mean(axis=0), None, floor)
    else:
        global_cov = floor * np.eye(dim)
    weights = np.empty(n_mix)
    means = np.empty((n_mix, dim))
    covs = np.empty((n_mix, dim, dim))
    for k in range(n_mix):
        members = rows[assign == k]
        weights[k] = max(len(members), 1)
        means[k] = members.mean(axis=0) if len(members) else centers[k]
        covs[k] = _floored_cov(members, means[k], global_cov, floor) if len(members) >= 2 else global_cov
    weights /= weights.sum()
    return weights, means, covs


def _e_step(rows, weights, means, covs):
    n, m = rows.shape[0], weights.shape[0]
    log_prob = np.empty((n, m))
    for k in range(m):
        chol = _chol(covs[k])
        log_prob[:, k] = _log_weight(weights[k]) + _log_gauss_chol(rows - means[k], chol)
    top = log_prob.max(axis=1, keepdims=True)
    lse = top[:, 0] + np.log(np.sum(np.exp(log_prob - top), axis=1))
    return log_prob - lse[:, None], float(lse.sum())


def _m_step(rows, resp, floor):
    n, dim = rows.shape
    nk = resp.sum(axis=0)
    nk = np.maximum(nk, np.finfo(np.float64).tiny)
    weights = nk / n
    weights /= weights.sum()
    means = (resp.T @ rows) / nk[:, None]
    covs = np.empty((resp.shape[1], dim, dim))
    for k in range(resp.shape[1]):
        centered = rows - means[k]
        cov = (centered * resp[:, k : k + 1]).T @ centered / nk[k]
        covs[k] = _floor_covariance(cov, floor)
    return weights, means, covs


def _floored_cov(members, mean, fallback, floor):
    if len(members) < 2:
        return fallback
    centered = members - mean
    return _floor_covariance(centered.T @ centered / len(members), floor)


def _floor_covariance(cov, floor):
    """Symmetrize and clip eigenvalues to >= floor; identity when already above."""
    sym = (cov + cov.T) / 2.0
    if not np.all(np.isfinite(sym)):
        raise DegenerateCovariance("covariance contains non-finite values")
    vals, vecs = np.linalg.eigh(sym)
    if vals[0] >= floor:
        return sym
    vals = np.maximum(vals, floor)
    return (vecs * vals) @ vecs.T


def _chol(cov):
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise DegenerateCovariance(f"covariance not positive definite: {exc}") from None


def _log_weight(w):
    return np.log(w) if w > 0 else -np.inf


def _log_gauss_chol(centered, chol):
    dim = centered.shape[1]
    z = np.linalg.solve(chol, centered.T).T
    maha = np.sum(z * z, axis=1)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    return -0.5 * (dim * np.log(2.0 * np.pi) + logdet + maha)


# ---------------------------------------------------------------------------
# LGMM container
# ---------------------------------------------------------------------------

def read_model(path) -> JointGmm:
    data = _read_bytes(path)
    if len(data) < _LGMM_HEADER.size:
        if data[:4] != _LGMM_MAGIC[: len(data)] or len(data) < 4:
            raise BadMagic("expected magic 'LGM1'", path=path, where=0)
        raise TruncatedFile(
            f"header needs {_LGMM_HEADER.size} bytes, file has {len(data)}",
            path=path, where=len(data))
    magic, m, dx, dy = _LGMM_HEADER.unpack_from(data, 0)
    if magic != _LGMM_MAGIC:
        raise BadMagic(f"expected magic 'LGM1', found {magic!r}", path=path, where=0)
    d = dx + dy
    counts = (m, m * d, m * d * d)
    expected = _LGMM_HEADER.size + 8 * sum(counts)
    if len(data) < expected:
        raise TruncatedFile(
            f"model payload needs {expected} bytes, file has {len(data)}",
            path=path, where=len(data))
    offset = _LGMM_HEADER.size
    weights = np.frombuffer(data, dtype="<f8", count=counts[0], offset=offset).copy()
    offset += 8 * counts[0]
    means = np.frombuffer(data, dtype="<f8", count=counts[1], offset=offset).reshape(m, d).copy()
    offset += 8 * counts[1]
    covs = np.frombuffer(data, dtype="<f8", count=counts[2], offset=offset).reshape(m, d, d).copy()
    return JointGmm(weights=weights, means=means, covariances=covs, dx=dx, dy=dy)


def write_model(path, model: JointGmm) -> None:
    header = _LGMM_HEADER.pack(_LGMM_MAGIC, model.n_mix, model.dx, model.dy)
    blob = b"".join([
        header,
        np.ascontiguousarray(model.weights, dtype="<f8").tobytes(),
        np.ascontiguousarray(model.means, dtype="<f8").tobytes(),
        np.ascontiguousarray(model.covariances, dtype="<f8").tobytes(),
    ])
    _write_bytes(path, blob)
