"""Numeric verifiers for three Gronwall-type inequalities.

Each bound has an equality case (an ODE whose solution saturates the
inequality); the verifiers integrate those ODEs with fixed-step RK4 and
check domination, exactness, or both.  The bounds themselves are plain
quadrature formulas usable as analysis utilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ScalarPath:
    """Nonnegative scalar function sampled on an increasing time grid."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        if g.ndim != 1 or g.shape != v.shape or g.size < 2:
            raise ValueError("grid and values must be 1-D of equal length >= 2")
        if np.any(np.diff(g) <= 0):
            raise ValueError("grid must be strictly increasing")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValueError("values must be finite and nonnegative")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    def at(self, t: float) -> float:
        return float(np.interp(t, self.grid, self.values))


def _cumtrapz(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))
    return out


# --------------------------------------------------------- linear (A.1.1 type)

def gronwall1_bound(h: ScalarPath, g: ScalarPath, t: float,
                    hprime: ScalarPath | None = None) -> float:
    """Bound for f <= h + int_0^t g f with h nondecreasing:

        h(0) exp(int_0^t g) + int_0^t h'(s) exp(int_s^t g) ds,

    by trapezoidal quadrature on h's grid.  h' may be supplied as a path;
    otherwise it is taken by finite differences of h.
    """
    grid = h.grid
    if t < grid[0] - 1e-12 or t > grid[-1] + 1e-12:
        raise ValueError("t outside grid")
    gv = np.interp(grid, g.grid, g.values)
    if hprime is not None:
        hp = np.interp(grid, hprime.grid, hprime.values)
    else:
        hp = np.gradient(h.values, grid)
    big_g = _cumtrapz(gv, grid)
    gt = float(np.interp(t, grid, big_g))
    mask = grid <= t + 1e-15
    sub = grid[mask]
    integrand = hp[mask] * np.exp(gt - big_g[mask])
    tail = float(np.trapezoid(integrand, sub))
    if sub[-1] < t:  # partial last cell up to t
        hp_t = float(np.interp(t, grid, hp))
        tail += 0.5 * (integrand[-1] + hp_t) * (t - sub[-1])
    return float(h.values[0] * math.exp(gt) + tail)


# ----------------------------------------------------- logarithmic (A.1.2 type)

def gronwall2_bound(f0: float, C: float, t: float, T: float) -> float:
    """Bound exp(1 - (1 - ln f0) e^(-C t)) for the log-Gronwall inequality.

    Requires f0 < min(exp(1 - e^(C T)), 1); f0 = 0 propagates to 0.  The
    bound is tight at t = 0 and is the exact solution of
    f' = C f (1 + ln^- f) started from f0.
    """
    if f0 < 0:
        raise ValueError("f0 must be nonnegative")
    if f0 == 0.0:
        return 0.0
    if not t <= T:
        raise ValueError("t must lie in [0, T]")
    if f0 >= min(math.exp(1.0 - math.exp(C * T)), 1.0):
        raise ValueError("initial datum too large for log-Gronwall")
    return math.exp(1.0 - (1.0 - math.log(f0)) * math.exp(-C * t))


# ----------------------------------------------------- superlinear (A.1.3 type)

GRONWALL3_FORMS = ("ode", "proof", "statement")


def _gronwall3_rate(C1: float, gamma: float, form: str) -> float:
    if form == "ode":
        return (gamma - 1.0) * C1
    if form == "proof":
        return C1 / (gamma - 1.0)
    if form == "statement":
        return C1 * C1 / (gamma - 1.0)
    raise ValueError(f"form must be one of {GRONWALL3_FORMS}")


def gronwall3_blowup_time(C0: float, C1: float, gamma: float, form: str = "ode") -> float:
    return C0 ** (1.0 - gamma) / _gronwall3_rate(C1, gamma, form)


def gronwall3_bound(C0: float, C1: float, gamma: float, t: float,
                    form: str = "ode") -> float:
    """Bound (C0^(1-gamma) - rate * t)^(1/(1-gamma)) for f <= C0 + C1 int f^gamma.

    form="ode" uses rate = (gamma-1) C1, the exact solution of
    f' = C1 f^gamma from C0 (so the bound is tight on the equality case);
    "proof" (rate = C1/(gamma-1)) and "statement" (rate = C1^2/(gamma-1))
    reproduce the two published variants for fidelity audits.  All three
    coincide at gamma = 2, C1 = 1.
    """
    if gamma <= 1.0:
        raise ValueError("gamma must exceed 1")
    if C0 <= 0 or C1 <= 0:
        raise ValueError("C0 and C1 must be positive")
    base = C0 ** (1.0 - gamma) - _gronwall3_rate(C1, gamma, form) * t
    if base <= 0.0:
        raise ValueError("bound blown up")
    return base ** (1.0 / (1.0 - gamma))


# --------------------------------------------------------------- RK4 oracles

def rk4_path(rhs, y0: np.ndarray, t_end: np.ndarray, n_steps: int) -> np.ndarray:
    """Vectorized fixed-step RK4 for y' = rhs(s, y) on per-trial horizons.

    Time is normalized per trial: trial i integrates on [0, t_end_i] in
    n_steps equal steps, all trials advancing together.
    """
    y = np.array(y0, dtype=np.float64)
    t_end = np.asarray(t_end, dtype=np.float64)
    hs = t_end / n_steps
    s = np.zeros_like(y)
    for _ in range(n_steps):
        k1 = rhs(s, y)
        k2 = rhs(s + 0.5 * hs, y + 0.5 * hs * k1)
        k3 = rhs(s + 0.5 * hs, y + 0.5 * hs * k2)
        k4 = rhs(s + hs, y + hs * k3)
        y = y + hs / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        s = s + hs
    return y


@dataclass
class VerifierReport:
    name: str
    trials: int
    worst_excess: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.worst_excess <= self.tolerance


def verify_gronwall1(n_trials: int = 100, seed: int = 0, knots: int = 9,
                     grid_step: float = 1e-4, T: float = 1.0) -> VerifierReport:
    """Random piecewise-linear (h, g): the equality solution of
    f = h + int_0^t g f must not exceed the bound by 1e-4 relative."""
    rng = np.random.default_rng(seed)
    kt = np.linspace(0.0, T, knots)
    grid = np.arange(0.0, T + grid_step / 2, grid_step)
    worst = 0.0
    for _ in range(n_trials):
        g_knots = rng.uniform(0.0, 3.0, knots)
        h0 = rng.uniform(0.1, 2.0)
        h_incr = rng.uniform(0.0, 2.0, knots - 1)
        h_knots = h0 + np.concatenate([[0.0], np.cumsum(h_incr)])
        gv = np.interp(grid, kt, g_knots)
        hv = np.interp(grid, kt, h_knots)
        # equality case: F' = g (h + F), F(0) = 0, f = h + F
        big_f = np.zeros_like(grid)
        for i in range(grid.size - 1):
            dt = grid[i + 1] - grid[i]
            def rhs(offset, val):
                gm = gv[i] + (gv[i + 1] - gv[i]) * offset / dt
                hm = hv[i] + (hv[i + 1] - hv[i]) * offset / dt
                return gm * (hm + val)
            k1 = rhs(0.0, big_f[i])
            k2 = rhs(dt / 2, big_f[i] + dt / 2 * k1)
            k3 = rhs(dt / 2, big_f[i] + dt / 2 * k2)
            k4 = rhs(dt, big_f[i] + dt * k3)
            big_f[i + 1] = big_f[i] + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        f_num = hv[-1] + big_f[-1]
        bound = gronwall1_bound(ScalarPath(grid, hv), ScalarPath(grid, gv), T)
        worst = max(worst, f_num / bound - 1.0)
    return VerifierReport("gronwall1", n_trials, worst, 1e-4)


def verify_gronwall2(n_trials: int = 100, seed: int = 0,
                     n_steps: int = 100_000, T: float = 1.0) -> tuple[VerifierReport, VerifierReport]:
    """Equality ODE f' = C f (1 + ln^- f): RK4 must stay below the bound
    (one-sided, 1e-6) and agree with it at T (equality case, 1e-6)."""
    rng = np.random.default_rng(seed)
    cs = rng.uniform(0.2, 2.0, n_trials)
    caps = np.minimum(np.exp(1.0 - np.exp(cs * T)), 1.0)
    f0 = caps * 10.0 ** rng.uniform(-3.0, -0.2, n_trials)

    def rhs(_s, f):
        return cs * f * (1.0 + np.maximum(0.0, -np.log(f)))

    f_num = rk4_path(rhs, f0, np.full(n_trials, T), n_steps)
    bounds = np.array([gronwall2_bound(f0[i], cs[i], T, T) for i in range(n_trials)])
    excess = float(np.max(f_num - bounds))
    gap = float(np.max(np.abs(f_num - bounds)))
    return (
        VerifierReport("gronwall2-dominates", n_trials, excess, 1e-6),
        VerifierReport("gronwall2-equality", n_trials, gap, 1e-6),
    )


def verify_gronwall3(n_trials: int = 100, seed: int = 0,
                     n_steps: int = 100_000) -> VerifierReport:
    """Equality ODE f' = C1 f^gamma: RK4 at 90% of blow-up time must match
    the default bound to 1e-6 relative."""
    rng = np.random.default_rng(seed)
    c0 = rng.uniform(0.5, 2.0, n_trials)
    c1 = rng.uniform(0.5, 2.0, n_trials)
    gam = rng.uniform(1.2, 4.0, n_trials)
    t_end = 0.9 * np.array([gronwall3_blowup_time(c0[i], c1[i], gam[i])
                            for i in range(n_trials)])

    def rhs(_s, f):
        return c1 * f ** gam

    f_num = rk4_path(rhs, c0, t_end, n_steps)
    bounds = np.array([gronwall3_bound(c0[i], c1[i], gam[i], t_end[i])
                       for i in range(n_trials)])
    rel = float(np.max(np.abs(f_num - bounds) / bounds))
    return VerifierReport("gronwall3-equality", n_trials, rel, 1e-6)
