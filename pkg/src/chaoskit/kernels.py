"""Closed-form interaction forces and their envelope/Lipschitz certificates.

Four kernel families are supported: the singular Newtonian force
``xi * x / |x|^d``, the power-law force ``xi * x / |x|^(alpha+1)`` with
``alpha in [0, d-1)``, and the two cut-off variants obtained by flattening
the singularity inside radius ``r_N = N^(-delta)``:

    cut-off force(x) = xi * x / max(|x|, r_N)^e,    e = d or alpha + 1.

The Newtonian case is the power case with ``alpha = d - 1``.  All
functions are pure and accept single points or arrays of points.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class Family(str, enum.Enum):
    NEWTONIAN_EXACT = "newtonian_exact"
    NEWTONIAN_CUTOFF = "newtonian_cutoff"
    POWER_EXACT = "power_exact"
    POWER_CUTOFF = "power_cutoff"

    @property
    def is_cutoff(self) -> bool:
        return self in (Family.NEWTONIAN_CUTOFF, Family.POWER_CUTOFF)

    @property
    def is_power(self) -> bool:
        return self in (Family.POWER_EXACT, Family.POWER_CUTOFF)


@dataclass(frozen=True)
class KernelSpec:
    """Which interaction force, with all scale parameters.

    ``bigN`` is the cut-off scale parameter: it enters only through the
    cut-off radius ``N^(-delta)`` and is ignored by exact families, as is
    ``delta``.  ``alpha`` is ignored by Newtonian families (where the
    effective singularity exponent is ``d - 1``).
    """

    family: Family
    d: int
    delta: float | None = None
    alpha: float | None = None
    xi: int = 1
    bigN: int | None = None

    def __post_init__(self):
        if not isinstance(self.d, (int, np.integer)) or self.d < 1:
            raise ValueError("d must be an integer >= 1")
        if self.xi not in (-1, 0, 1):
            raise ValueError("xi must be +1, -1, or 0 (force disabled)")
        if self.family.is_power:
            if self.alpha is None or not 0.0 <= self.alpha < self.d - 1:
                raise ValueError("alpha must lie in [0, d-1) for power families")
        if self.family.is_cutoff:
            if self.bigN is None or int(self.bigN) < 1:
                raise ValueError("cut-off families need a positive integer bigN")
            # the theorem windows delta < 1/d resp. 1/(1+alpha) are enforced
            # at config load; the force itself only needs delta > 0
            if self.delta is None or not 0.0 < self.delta < np.inf:
                raise ValueError("delta must be a positive finite cut-off exponent")

    @property
    def exponent(self) -> float:
        """Power ``e`` applied to the (possibly clipped) radius."""
        return float(self.d) if not self.family.is_power else float(self.alpha) + 1.0

    @property
    def cutoff_radius(self) -> float:
        """r_N = N^(-delta); strictly positive and finite for cut-off specs."""
        if not self.family.is_cutoff:
            raise ValueError("cutoff_radius undefined for exact families")
        return float(self.bigN) ** (-self.delta)

    @property
    def magnitude_cap(self) -> float:
        """Largest attainable |force| for a cut-off spec: N^((e-1)*delta)."""
        return self.cutoff_radius ** (1.0 - self.exponent)

    def exact_counterpart(self) -> "KernelSpec":
        fam = Family.NEWTONIAN_EXACT if not self.family.is_power else Family.POWER_EXACT
        return KernelSpec(family=fam, d=self.d, alpha=self.alpha, xi=self.xi)


def _radii(x: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(x * x, axis=-1))


def _check_points(x, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != d:
        raise ValueError(f"invalid point: expected last axis {d}, got {x.shape[-1]}")
    if not np.all(np.isfinite(x)):
        raise ValueError("invalid point")
    return x


def force(spec: KernelSpec, x) -> np.ndarray:
    """Interaction force at x (or at each row of an array of points).

    For cut-off families the radius is clipped at r_N from below, so the
    magnitude never exceeds N^((e-1)*delta).  The singular point maps to
    zero for every family.
    """
    x = _check_points(x, spec.d)
    # flatten to (n, d) so both branches run the same vectorized pow loop
    # and the cut-off force coincides bitwise with the exact one for
    # |x| >= r_N (scalar and array pow differ in the last ulp)
    pts = x.reshape(-1, spec.d)
    r = _radii(pts)
    e = spec.exponent
    if spec.family.is_cutoff:
        b = np.maximum(r, spec.cutoff_radius)
        w = spec.xi * b ** (-e)
    else:
        safe = np.where(r > 0.0, r, 1.0)
        w = np.where(r > 0.0, spec.xi * safe ** (-e), 0.0)
    return (pts * w[:, None]).reshape(x.shape)


def envelope(spec: KernelSpec, x) -> np.ndarray:
    """Envelope function l^N dominating the weak-strong force increment.

    Equals 1/|x|^e outside radius e * r_N and the constant N^(e*delta)
    inside (boundary included in the outer branch).
    """
    if not spec.family.is_cutoff:
        raise ValueError("envelope undefined without cut-off")
    x = _check_points(x, spec.d)
    r = _radii(x)
    e = spec.exponent
    rn = spec.cutoff_radius
    safe = np.where(r > 0.0, r, 1.0)
    return np.where(r >= e * rn, safe ** (-e), rn ** (-e))


def lipschitz_bound(spec: KernelSpec, x, y) -> np.ndarray:
    """Right-hand side of the two-point force Lipschitz estimate, C0 = 1.

    Returns |x-y| * (max(|x|, r_N)^(-e) + max(|y|, r_N)^(-e)); callers
    compare |force(x) - force(y)| against a fitted multiple of this.
    """
    if not spec.family.is_cutoff:
        raise ValueError("lipschitz_bound requires a cut-off spec")
    x = _check_points(x, spec.d)
    y = _check_points(y, spec.d)
    e = spec.exponent
    rn = spec.cutoff_radius
    bx = np.maximum(_radii(x), rn)
    by = np.maximum(_radii(y), rn)
    return _radii(x - y) * (bx ** (-e) + by ** (-e))


def weak_strong_envelope_gap(spec: KernelSpec, x, z) -> tuple[np.ndarray, np.ndarray]:
    """Pair (|force(x) - force(x+z)|, envelope(x) * |z|) for ratio fitting.

    The envelope inequality is only claimed for |z| <= (e-1) * r_N; the
    caller is responsible for restricting to that range.
    """
    lhs = _radii(force(spec, x) - force(spec, np.asarray(x) + np.asarray(z)))
    rhs = envelope(spec, x) * _radii(_check_points(z, spec.d))
    return lhs, rhs


def newtonian_cutoff(d: int, delta: float, bigN: int, xi: int = 1) -> KernelSpec:
    return KernelSpec(Family.NEWTONIAN_CUTOFF, d=d, delta=delta, bigN=bigN, xi=xi)


def power_cutoff(d: int, alpha: float, delta: float, bigN: int, xi: int = 1) -> KernelSpec:
    return KernelSpec(Family.POWER_CUTOFF, d=d, alpha=alpha, delta=delta, bigN=bigN, xi=xi)


def with_doubled_delta(spec: KernelSpec) -> KernelSpec:
    """Same family with the cut-off exponent doubled (much smaller radius).

    Used as a small-cut-off proxy when the exact kernel is integrable
    enough to compare against.  If 2*delta leaves the admissible range
    the result is clamped to the midpoint between delta and the range end.
    """
    if not spec.family.is_cutoff:
        raise ValueError("with_doubled_delta requires a cut-off spec")
    new_delta = 2.0 * spec.delta
    dmax = 1.0 / spec.d if not spec.family.is_power else 1.0 / (1.0 + spec.alpha)
    if new_delta >= dmax:
        new_delta = 0.5 * (spec.delta + dmax)
    return KernelSpec(spec.family, d=spec.d, delta=new_delta, alpha=spec.alpha,
                      xi=spec.xi, bigN=spec.bigN)
