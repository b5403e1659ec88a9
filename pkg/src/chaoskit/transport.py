"""Wasserstein distances between empirical measures.

Three routes with different cost/exactness trade-offs:

* ``wp_exact`` solves the assignment problem (shortest augmenting path,
  exact optimum) between equal-size point clouds, capped at n = 4096;
* ``wp_sliced`` averages exact one-dimensional distances over random
  projection directions and scales to any size;
* ``coupled_sup`` evaluates the pathwise sup distance of a synchronous
  coupling, which upper-bounds the infinity-order transport distance.

One-dimensional distances are exact for unequal sample sizes too, via the
merged-quantile-level construction (sorted matching when sizes agree).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .dynamics import CoupledRun
from .rng import Stream

EXACT_CAP = 4096
SUBSAMPLE_TO = 2048
DEFAULT_PROJECTIONS = 128


class Method(str, enum.Enum):
    EXACT_ASSIGNMENT = "exact_assignment"
    SLICED = "sliced"
    COUPLED_SUP = "coupled_sup"


@dataclass(frozen=True)
class DistanceResult:
    value: float
    method: Method
    p: float
    n_projections: int | None = None
    stderr: float | None = None
    subsampled_to: int | None = None

    def __post_init__(self):
        if self.value < 0.0:
            raise ValueError("distance must be nonnegative")


def _points(a) -> np.ndarray:
    pts = np.asarray(getattr(a, "points", a), dtype=np.float64)
    if pts.ndim != 2:
        raise ValueError("expected an (n, m) point array or EmpiricalMeasure")
    return pts


# ------------------------------------------------------------ exact assignment

def wp_exact(a, b, p: float = 1.0, return_assignment: bool = False):
    """Order-p Wasserstein distance between equal-size uniform point clouds.

    Minimizes the mean p-th power of the Euclidean ground cost over all
    bijections and returns the p-th root.  The optimal bijection is
    available on request.
    """
    pa, pb = _points(a), _points(b)
    if pa.shape[0] != pb.shape[0]:
        raise ValueError("unbalanced not supported")
    if pa.shape[1] != pb.shape[1]:
        raise ValueError("dimension mismatch")
    if pa.shape[0] > EXACT_CAP:
        raise ValueError(f"exact assignment capped at n <= {EXACT_CAP}")
    if not 1.0 <= p < math.inf:
        raise ValueError("p must lie in [1, inf)")
    cost = cdist(pa, pb)
    if p != 1.0:
        cost = cost ** p
    rows, cols = linear_sum_assignment(cost)
    value = float(np.mean(cost[rows, cols])) ** (1.0 / p)
    result = DistanceResult(value, Method.EXACT_ASSIGNMENT, p)
    if return_assignment:
        return result, cols[np.argsort(rows)]
    return result


def subsampled_wp(a, b, p: float, stream: Stream, cap: int = SUBSAMPLE_TO,
                  lane: int = 0) -> DistanceResult:
    """wp_exact on equal-size subsamples of at most ``cap`` points per side.

    The honest surrogate beyond the exact-assignment cap: both clouds are
    subsampled (without replacement) to the same size and the result is
    tagged with that size.
    """
    pa, pb = _points(a), _points(b)
    k = min(pa.shape[0], pb.shape[0], cap)
    gen = stream.aux_generator(lane=lane)
    if pa.shape[0] > k:
        pa = pa[gen.choice(pa.shape[0], size=k, replace=False)]
    if pb.shape[0] > k:
        pb = pb[gen.choice(pb.shape[0], size=k, replace=False)]
    base = wp_exact(pa, pb, p)
    sub = k if k < max(_points(a).shape[0], _points(b).shape[0]) else None
    return DistanceResult(base.value, base.method, p, subsampled_to=sub)


# ------------------------------------------------------------ one-dimensional

def _merged_level_tables(n: int, m: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Interval widths and per-side sorted-order indices of the common
    refinement of the two uniform quantile grids."""
    levels = np.union1d(np.arange(1, n + 1) / n, np.arange(1, m + 1) / m)
    widths = np.diff(np.concatenate([[0.0], levels]))
    mids = levels - 0.5 * widths
    ia = np.minimum((mids * n).astype(np.int64), n - 1)
    ib = np.minimum((mids * m).astype(np.int64), m - 1)
    return widths, ia, ib


def wasserstein_1d(a: np.ndarray, b: np.ndarray, p: float = 1.0) -> float:
    """Exact 1-D W_p between uniform empirical measures of any sizes."""
    a = np.sort(np.asarray(a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(b, dtype=np.float64).ravel())
    widths, ia, ib = _merged_level_tables(a.size, b.size)
    return float(np.sum(widths * np.abs(a[ia] - b[ib]) ** p) ** (1.0 / p))


def directional_moment(m: int, p: float) -> float:
    """E |theta_1|^p for theta uniform on the sphere S^(m-1); equals 1 in m=1."""
    return float(
        math.gamma((p + 1) / 2.0) * math.gamma(m / 2.0)
        / (math.sqrt(math.pi) * math.gamma((m + p) / 2.0))
    )


def wp_sliced(a, b, p: float = 1.0, n_projections: int = DEFAULT_PROJECTIONS,
              stream: Stream | None = None, calibrated: bool = True) -> DistanceResult:
    """Sliced W_p: mean of 1-D W_p^p over random directions, p-th root.

    Projections are uniform on the sphere; each 1-D distance is exact
    (sorted matching for equal sizes, merged quantile levels otherwise).
    By default the mean is divided by the directional moment E|theta_1|^p
    so the estimator is consistent for translated families (and coincides
    with the raw average in one dimension, where the moment is 1).  The
    standard error across projections is propagated to the root.
    """
    pa, pb = _points(a), _points(b)
    if pa.shape[1] != pb.shape[1]:
        raise ValueError("dimension mismatch")
    if not 1.0 <= p < math.inf:
        raise ValueError("p must lie in [1, inf)")
    dim = pa.shape[1]
    gen = (stream or Stream(0)).aux_generator(lane=7)
    dirs = gen.normal(size=(dim, n_projections))
    dirs /= np.linalg.norm(dirs, axis=0, keepdims=True)
    proja = np.sort(pa @ dirs, axis=0)  # (n, n_proj)
    projb = np.sort(pb @ dirs, axis=0)
    widths, ia, ib = _merged_level_tables(pa.shape[0], pb.shape[0])
    costs = np.abs(proja[ia, :] - projb[ib, :]) ** p  # (levels, n_proj)
    per_proj = widths @ costs  # W_p^p per direction
    if calibrated:
        per_proj = per_proj / directional_moment(dim, p)
    mean_pp = float(per_proj.mean())
    value = mean_pp ** (1.0 / p)
    se_pp = float(per_proj.std(ddof=1) / np.sqrt(n_projections)) if n_projections > 1 else 0.0
    stderr = se_pp / (p * value ** (p - 1.0)) if value > 0 else 0.0
    return DistanceResult(value, Method.SLICED, p, n_projections=n_projections, stderr=stderr)


# ------------------------------------------------------------ coupled diagnostics

def _split_blocks(run: CoupledRun) -> tuple[np.ndarray, np.ndarray]:
    dx = np.linalg.norm(run.interacting.positions - run.reference.positions, axis=1)
    dv = np.linalg.norm(run.interacting.velocities - run.reference.velocities, axis=1)
    return dx, dv


def coupled_sup(run: CoupledRun, weighted: bool = False,
                bigN: int | None = None) -> DistanceResult:
    """Pathwise sup distance of the synchronous coupling.

    Unweighted: max_i (|dX_i| + |dV_i|); weighted multiplies the position
    block by sqrt(ln N).  Upper-bounds the infinity-order transport
    distance between the two empirical measures (identity pairing is one
    admissible coupling).
    """
    dx, dv = _split_blocks(run)
    if weighted:
        if bigN is None:
            raise ValueError("weighted coupled_sup needs bigN for sqrt(ln N)")
        value = float(np.max(math.sqrt(math.log(bigN)) * dx + dv))
    else:
        value = float(np.max(dx + dv))
    return DistanceResult(value, Method.COUPLED_SUP, p=math.inf)


def j_functional(run: CoupledRun, delta: float, bigN: int) -> float:
    """Clamped rescaled coupling deviation, blockwise sup over particles:

        min(1, sqrt(ln N) N^delta max_i|dX_i| + N^delta max_i|dV_i|).

    Values below one certify that the infinity-order distance between the
    coupled empirical measures is below N^(-delta).
    """
    dx, dv = _split_blocks(run)
    nd = float(bigN) ** delta
    raw = math.sqrt(math.log(bigN)) * nd * float(np.max(dx)) + nd * float(np.max(dv))
    return min(1.0, raw)
