"""Empirical measures, kernel density monitors, and moment diagnostics.

The density estimator exists to watch the sup norm and L^ell norms of the
spatial density along a run (the uniform-in-N boundedness hypotheses);
the dynamics never consume its output, so estimator bias cannot feed back
into trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import Ensemble

DEFAULT_RESOLUTION = {1: 1024, 2: 256, 3: 64}
GRID_MARGIN_BANDWIDTHS = 3.0


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Uniformly weighted point cloud in R^m."""

    points: np.ndarray  # (n, m)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ValueError("points must be a nonempty (n, m) array")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def m(self) -> int:
        return self.points.shape[1]

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.n, 1.0 / self.n)


def spatial_marginal(ens: Ensemble) -> EmpiricalMeasure:
    """Projection of the phase-space ensemble onto positions."""
    return EmpiricalMeasure(ens.positions.copy())


def phase_measure(ens: Ensemble) -> EmpiricalMeasure:
    """Phase-space empirical measure in R^(2d)."""
    return EmpiricalMeasure(np.concatenate([ens.positions, ens.velocities], axis=1))


def moment(meas: EmpiricalMeasure, q: float) -> float:
    """q-th radial moment (1/n) sum |z_i|^q."""
    if q < 1:
        raise ValueError("q must be >= 1")
    return float(np.mean(np.linalg.norm(meas.points, axis=1) ** q))


@dataclass(frozen=True)
class DensityEstimate:
    """Gaussian-product KDE of a sample on an axis-aligned tensor grid.

    Bandwidths follow the per-axis rule h_k = sigma_k * n^(-1/(m+4)) unless
    supplied; the grid spans the sample extent plus three bandwidths on
    each side.
    """

    sample: EmpiricalMeasure
    bandwidth: np.ndarray  # (m,)
    axes: tuple[np.ndarray, ...]  # per-axis node positions

    @property
    def resolution(self) -> tuple[int, ...]:
        return tuple(len(ax) for ax in self.axes)


def silverman_bandwidth(meas: EmpiricalMeasure) -> np.ndarray:
    sigma = meas.points.std(axis=0, ddof=0)
    sigma[sigma == 0.0] = 1.0
    return sigma * meas.n ** (-1.0 / (meas.m + 4))


def density_estimate(meas: EmpiricalMeasure, bandwidth=None,
                     resolution: int | None = None) -> DensityEstimate:
    if bandwidth is None:
        h = silverman_bandwidth(meas)
    else:
        h = np.broadcast_to(np.asarray(bandwidth, dtype=np.float64), (meas.m,)).copy()
    if np.any(h <= 0):
        raise ValueError("bandwidths must be positive")
    res = resolution or DEFAULT_RESOLUTION.get(meas.m, 32)
    lo = meas.points.min(axis=0) - GRID_MARGIN_BANDWIDTHS * h
    hi = meas.points.max(axis=0) + GRID_MARGIN_BANDWIDTHS * h
    axes = tuple(np.linspace(lo[k], hi[k], res) for k in range(meas.m))
    return DensityEstimate(meas, h, axes)


def _axis_factors(dens: DensityEstimate) -> list[np.ndarray]:
    """Per-axis Gaussian factor matrices A_k[g, i] = phi_h((grid_g - x_ik))."""
    out = []
    for k, ax in enumerate(dens.axes):
        h = dens.bandwidth[k]
        z = (ax[:, None] - dens.sample.points[None, :, k]) / h
        out.append(np.exp(-0.5 * z * z) / (h * math.sqrt(2.0 * math.pi)))
    return out


def evaluate_density(dens: DensityEstimate) -> np.ndarray:
    """KDE values on the full tensor grid (product kernel is separable)."""
    fac = _axis_factors(dens)
    n = dens.sample.n
    m = dens.sample.m
    if m == 1:
        return fac[0].sum(axis=1) / n
    if m == 2:
        return (fac[0] @ fac[1].T) / n
    if m == 3:
        return np.einsum("ai,bi,ci->abc", fac[0], fac[1], fac[2]) / n
    raise ValueError("density grids supported up to dimension 3")


def kde_sup_norm(dens: DensityEstimate) -> float:
    """Max of the density estimate over the grid nodes."""
    _require_coverage(dens)
    return float(evaluate_density(dens).max())


def grid_integral(dens: DensityEstimate, values: np.ndarray) -> float:
    """Trapezoidal quadrature of grid values over the full grid."""
    acc = values
    for k in range(len(dens.axes) - 1, -1, -1):
        acc = np.trapezoid(acc, dens.axes[k], axis=k)
    return float(acc)


def lp_norm_estimate(dens: DensityEstimate, ell: float) -> float:
    """L^ell norm of the KDE by grid quadrature; ell = inf routes to the sup."""
    if ell == math.inf:
        return kde_sup_norm(dens)
    if ell < 1:
        raise ValueError("ell must lie in [1, inf]")
    _require_coverage(dens)
    vals = evaluate_density(dens)
    return grid_integral(dens, vals ** ell) ** (1.0 / ell)


def _require_coverage(dens: DensityEstimate) -> None:
    pts = dens.sample.points
    for k, ax in enumerate(dens.axes):
        if pts[:, k].min() < ax[0] or pts[:, k].max() > ax[-1]:
            raise ValueError("grid underflow: grid does not cover the sample support")


def monitor_rows(ens: Ensemble, resolution: int | None = None) -> list[tuple[float, str, float]]:
    """Density and moment monitors of one snapshot, as (t, quantity, value)."""
    meas = spatial_marginal(ens)
    dens = density_estimate(meas, resolution=resolution)
    return [
        (ens.t, "sup_norm", kde_sup_norm(dens)),
        (ens.t, "l2_norm", lp_norm_estimate(dens, 2.0)),
        (ens.t, "moment_q2", moment(phase_measure(ens), 2)),
        (ens.t, "moment_q4", moment(phase_measure(ens), 4)),
    ]
