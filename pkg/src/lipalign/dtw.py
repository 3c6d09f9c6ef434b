"""Dynamic time warping with a pluggable frame distance.

``dtw_align`` is the production path: iterative cumulative-cost fill with
an explicit traceback matrix, optional Sakoe-Chiba band, and a fixed
deterministic tie-break (diagonal, then vertical, then horizontal).
``brute_force_align`` is an independently coded exhaustive search over the
same path space (suffix recursion evaluated in reverse topological order),
kept for testing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BandInfeasible, EmptySequence, TooLarge
from .seqio import AlignmentPath

_BRUTE_FORCE_LIMIT = 10_000

# step encoding used in traceback matrices
_DIAG, _VERT, _HORIZ = 0, 1, 2


@dataclass
class DtwConfig:
    """Options for ``dtw_align``.

    The step pattern is fixed to {(1,0), (0,1), (1,1)} with unweighted
    local costs, and ties always resolve diagonal, then vertical (source
    advance), then horizontal (target advance).
    """

    band_radius: int | None = None
    retain_cost_matrix: bool = False


@dataclass
class DtwResult:
    path: AlignmentPath
    total_cost: float
    cost_matrix: np.ndarray | None = None  # cumulative costs when retained


def dtw_align(src_seq, tgt_seq, metric, config: DtwConfig | None = None) -> DtwResult:
    """Minimum-cost monotone alignment between two frame sequences.

    ``metric`` is any callable ``metric(a, b) -> float``; objects exposing
    a ``matrix(src, tgt)`` method (e.g. ``DistanceMetric``) get their local
    costs computed in one vectorized pass.
    """
    config = config or DtwConfig()
    n, m = len(src_seq), len(tgt_seq)
    if n == 0 or m == 0:
        raise EmptySequence(f"cannot align sequences of lengths {n} and {m}")
    radius = config.band_radius
    if radius is not None and radius < abs(n - m):
        raise BandInfeasible(
            f"band radius {radius} < |{n} - {m}|; no path can reach the end")

    local = _local_costs(src_seq, tgt_seq, metric)
    acc = np.full((n, m), np.inf)
    ptr = np.full((n, m), -1, dtype=np.int8)

    acc[0, 0] = local[0, 0]
    for i in range(n):
        lo, hi = 0, m
        if radius is not None:
            lo, hi = max(0, i - radius), min(m, i + radius + 1)
        row = acc[i]
        prev = acc[i - 1] if i > 0 else None
        for j in range(lo, hi):
            if i == 0 and j == 0:
                continue
            best = np.inf
            step = -1
            if i > 0 and j > 0 and prev[j - 1] < best:
                best = prev[j - 1]
                step = _DIAG
            if i > 0 and prev[j] < best:
                best = prev[j]
                step = _VERT
            if j > 0 and row[j - 1] < best:
                best = row[j - 1]
                step = _HORIZ
            if step >= 0:
                row[j] = local[i, j] + best
                ptr[i, j] = step

    total = float(acc[n - 1, m - 1])
    if not np.isfinite(total):
        raise BandInfeasible("no feasible path within the band")

    points = [(n - 1, m - 1)]
    i, j = n - 1, m - 1
    while (i, j) != (0, 0):
        step = ptr[i, j]
        if step == _DIAG:
            i, j = i - 1, j - 1
        elif step == _VERT:
            i -= 1
        else:
            j -= 1
        points.append((i, j))
    points.reverse()

    path = AlignmentPath(points=np.array(points, dtype=np.int64))
    return DtwResult(
        path=path,
        total_cost=total,
        cost_matrix=acc if config.retain_cost_matrix else None,
    )


def brute_force_align(src_seq, tgt_seq, metric) -> DtwResult:
    """Exhaustive-search oracle over all monotone paths.

    Best suffix costs are evaluated from the end of the grid backwards
    (the recursion from the path definition, memoized by evaluation
    order), then the path is rebuilt forward preferring diagonal, then
    vertical, then horizontal successors on ties. Guarded to small
    instances; test use only.
    """
    n, m = len(src_seq), len(tgt_seq)
    if n == 0 or m == 0:
        raise EmptySequence(f"cannot align sequences of lengths {n} and {m}")
    if n * m > _BRUTE_FORCE_LIMIT:
        raise TooLarge(f"{n} x {m} grid exceeds the exhaustive-search guard")

    local = _local_costs(src_seq, tgt_seq, metric)
    suffix = np.empty((n, m))
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            if i == n - 1 and j == m - 1:
                tail = 0.0
            else:
                tail = np.inf
                if i + 1 < n and j + 1 < m:
                    tail = suffix[i + 1, j + 1]
                if i + 1 < n and suffix[i + 1, j] < tail:
                    tail = suffix[i + 1, j]
                if j + 1 < m and suffix[i, j + 1] < tail:
                    tail = suffix[i, j + 1]
            suffix[i, j] = local[i, j] + tail

    points = [(0, 0)]
    i = j = 0
    while (i, j) != (n - 1, m - 1):
        candidates = []
        if i + 1 < n and j + 1 < m:
            candidates.append((suffix[i + 1, j + 1], i + 1, j + 1))
        if i + 1 < n:
            candidates.append((suffix[i + 1, j], i + 1, j))
        if j + 1 < m:
            candidates.append((suffix[i, j + 1], i, j + 1))
        best = min(c[0] for c in candidates)
        for cost, ni, nj in candidates:
            if cost == best:
                i, j = ni, nj
                break
        points.append((i, j))

    path = AlignmentPath(points=np.array(points, dtype=np.int64))
    return DtwResult(path=path, total_cost=float(suffix[0, 0]), cost_matrix=None)


def _local_costs(src_seq, tgt_seq, metric) -> np.ndarray:
    if hasattr(metric, "matrix"):
        local = np.asarray(metric.matrix(src_seq, tgt_seq), dtype=np.float64)
        if local.shape != (len(src_seq), len(tgt_seq)):
            raise ValueError(f"metric.matrix returned shape {local.shape}")
        return local
    local = np.empty((len(src_seq), len(tgt_seq)))
    for i in range(len(src_seq)):
        a = src_seq[i]
        for j in range(len(tgt_seq)):
            local[i, j] = metric(a, tgt_seq[j])
    return local
