"""Time integration of the interacting particle system and its couplings.

Three systems appear:

* the interacting N-body system, whose drift on particle i is the mean
  of the cut-off force over all separations from the other particles;
* reference copies, driven by the empirical field of a pilot cloud
  instead of their own (the particle surrogate of the nonlinear SDE);
* the pilot cloud itself, a large interacting system standing in for the
  regularized mean-field law.

Interacting and reference copies consume identical Gaussian increments
per particle and step (synchronous coupling); the pilot draws from a
disjoint stream.  Everything is an explicit Euler-Maruyama step with the
position updated from the pre-step velocity.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numba
import numpy as np

from . import _pair
from .kernels import KernelSpec
from .rng import ROLE_COUPLED, ROLE_PILOT, Stream


class BlowUpError(RuntimeError):
    """A state coordinate left the finite range during integration."""

    def __init__(self, step: int, t: float, system: str = ""):
        tag = f" in {system}" if system else ""
        super().__init__(f"numerical blow-up at step {step}{tag} (t = {t:g})")
        self.step = step
        self.t = t
        self.system = system


class Scheme(str, enum.Enum):
    EULER_MARUYAMA = "euler_maruyama"


class InitKind(str, enum.Enum):
    GAUSSIAN = "gaussian"
    UNIFORM_BOX = "uniform_box"
    POLY_DECAY = "poly_decay"


@dataclass(frozen=True)
class SimParams:
    """Noise strength, time grid, and seed of one run.

    ``dt = None`` selects the default rule dt = min(1e-3, r_N / (4 v_rms))
    at run start, so a particle needs at least four steps to cross the
    cut-off radius.  The number of steps is ceil(T / dt) with the final
    partial step shortened to land exactly on T.
    """

    sigma: float
    T: float
    dt: float | None = None
    seed: int = 0
    scheme: Scheme = Scheme.EULER_MARUYAMA

    def __post_init__(self):
        if not self.sigma >= 0.0:
            raise ValueError("sigma must be >= 0")
        if not self.T > 0.0:
            raise ValueError("T must be > 0")
        if self.dt is not None and not 0.0 < self.dt <= self.T:
            raise ValueError("dt must satisfy 0 < dt <= T")
        if self.scheme != Scheme.EULER_MARUYAMA:
            raise ValueError("only the Euler-Maruyama scheme is implemented")


@dataclass(frozen=True)
class InitialLaw:
    """Product initial law on phase space.

    GAUSSIAN: positions and velocities N(mean, scale^2 I).
    UNIFORM_BOX: both uniform on [-half_width, half_width]^d.
    POLY_DECAY: positions uniform on the box, velocity radius drawn from
    the density proportional to r^(d-1) (1 + r^2)^(-gamma_v / 2), which
    makes the velocity marginal proportional to <v>^(-gamma_v).
    """

    kind: InitKind
    mean: float = 0.0
    scale: float = 1.0
    half_width: float = 1.0
    gamma_v: float | None = None

    def __post_init__(self):
        if self.kind == InitKind.GAUSSIAN and self.scale <= 0:
            raise ValueError("gaussian scale must be positive")
        if self.kind in (InitKind.UNIFORM_BOX, InitKind.POLY_DECAY) and self.half_width <= 0:
            raise ValueError("box half-width must be positive")

    def validate_for_dim(self, d: int) -> None:
        if self.kind == InitKind.POLY_DECAY:
            if self.gamma_v is None or self.gamma_v <= d:
                raise ValueError("non-integrable velocity law: poly decay needs gamma_v > d")


@dataclass
class Ensemble:
    """N phase-space particles at a common time."""

    positions: np.ndarray  # (N, d)
    velocities: np.ndarray  # (N, d)
    t: float = 0.0

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64)
        self.velocities = np.asarray(self.velocities, dtype=np.float64)
        if self.positions.ndim != 2 or self.positions.shape != self.velocities.shape:
            raise ValueError("positions and velocities must both be (N, d)")
        if self.positions.shape[0] < 1:
            raise ValueError("ensemble needs N >= 1")
        if not (np.all(np.isfinite(self.positions)) and np.all(np.isfinite(self.velocities))):
            raise ValueError("ensemble coordinates must be finite")

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def d(self) -> int:
        return self.positions.shape[1]

    def copy(self) -> "Ensemble":
        return Ensemble(self.positions.copy(), self.velocities.copy(), self.t)


@dataclass
class CoupledRun:
    """Synchronously coupled pair plus the pilot cloud driving the copies."""

    interacting: Ensemble
    reference: Ensemble
    pilot: Ensemble
    coupled_stream: Stream
    pilot_stream: Stream

    def __post_init__(self):
        a, b = self.interacting, self.reference
        if a.n != b.n or a.d != b.d:
            raise ValueError("interacting and reference must have equal N and d")
        if a.t != b.t or a.t != self.pilot.t:
            raise ValueError("coupled systems must share the same time")


# ------------------------------------------------------------ sampling

def _poly_radial_pdf(d: int, gamma_v: float) -> tuple[np.ndarray, np.ndarray]:
    # unnormalized radial density r^(d-1) <r>^(-gamma); linear grid through
    # the bulk, geometric through the tail, extended until the neglected
    # mass is below 1e-12 of the total
    tail = (1e-12) ** (1.0 / (d - gamma_v))
    rmax = max(100.0, tail)
    r = np.concatenate([
        np.linspace(0.0, 50.0, 150_001),
        np.geomspace(50.0, rmax, 50_001)[1:],
    ])
    pdf = r ** (d - 1) * (1.0 + r * r) ** (-gamma_v / 2.0)
    return r, pdf


def _poly_radius_table(d: int, gamma_v: float) -> tuple[np.ndarray, np.ndarray]:
    r, pdf = _poly_radial_pdf(d, gamma_v)
    cdf = np.concatenate([[0.0], np.cumsum((pdf[1:] + pdf[:-1]) * 0.5 * np.diff(r))])
    cdf /= cdf[-1]
    return cdf, r


def sample_initial(law: InitialLaw, n: int, d: int, stream: Stream) -> Ensemble:
    """N i.i.d. phase-space draws; deterministic given the stream descriptor."""
    if n < 1:
        raise ValueError("need N >= 1")
    law.validate_for_dim(d)
    if law.kind == InitKind.GAUSSIAN:
        x = law.mean + law.scale * stream.init_gaussians((n, d), lane=0)
        v = law.mean * 0.0 + law.scale * stream.init_gaussians((n, d), lane=1)
    elif law.kind == InitKind.UNIFORM_BOX:
        hw = law.half_width
        x = hw * (2.0 * stream.init_uniforms(n * d, lane=0).reshape(n, d) - 1.0)
        v = hw * (2.0 * stream.init_uniforms(n * d, lane=1).reshape(n, d) - 1.0)
    else:  # POLY_DECAY
        hw = law.half_width
        x = hw * (2.0 * stream.init_uniforms(n * d, lane=0).reshape(n, d) - 1.0)
        cdf, radii = _poly_radius_table(d, law.gamma_v)
        u = stream.init_uniforms(n, lane=2)
        speed = np.interp(u, cdf, radii)
        direction = stream.init_gaussians((n, d), lane=3)
        norms = np.linalg.norm(direction, axis=1)
        norms[norms == 0.0] = 1.0
        v = speed[:, None] * direction / norms[:, None]
    return Ensemble(x, v, t=0.0)


# ------------------------------------------------------------ force dispatch

def _accumulate_field(xt: np.ndarray, xs: np.ndarray, spec: KernelSpec, out: np.ndarray) -> None:
    """out[:, i] = (xi / m) * sum_j force_kernel(xt[:, i] - xs[:, j]).

    All arrays are component-major (d, n).  Cut-off families only.
    """
    if not spec.family.is_cutoff:
        raise ValueError("N-body fields require a cut-off family")
    d = xt.shape[0]
    m = xs.shape[1]
    if spec.xi == 0:
        out[:] = 0.0
        return
    rn = spec.cutoff_radius
    rn2 = rn * rn
    e = spec.exponent
    coef = spec.xi / m
    if d == 2 and e == 2.0:
        _pair.acc_d2_e2(xt[0], xt[1], xs[0], xs[1], rn2, coef, out[0], out[1])
    elif d == 3 and e == 3.0:
        _pair.acc_d3_e3(xt[0], xt[1], xt[2], xs[0], xs[1], xs[2], rn2, coef,
                        out[0], out[1], out[2])
    elif d == 3 and e == 1.5:
        _pair.acc_d3_e15(xt[0], xt[1], xt[2], xs[0], xs[1], xs[2], rn2, coef,
                         out[0], out[1], out[2])
    else:
        _pair.acc_generic(xt, xs, rn2, -0.5 * e, coef, out)


def _to_state(ens: Ensemble) -> tuple[np.ndarray, np.ndarray]:
    return (np.ascontiguousarray(ens.positions.T), np.ascontiguousarray(ens.velocities.T))


def _to_ensemble(x: np.ndarray, v: np.ndarray, t: float) -> Ensemble:
    return Ensemble(np.ascontiguousarray(x.T), np.ascontiguousarray(v.T), t)


def _check_finite(x: np.ndarray, v: np.ndarray, step: int, t: float, system: str) -> None:
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
        raise BlowUpError(step, t, system)


# ------------------------------------------------------------ stepping

def resolve_dt(params: SimParams, spec: KernelSpec | None, v_ref: float) -> float:
    """Explicit dt, or the default rule min(1e-3, r_N / (4 v_rms))."""
    if params.dt is not None:
        return params.dt
    dt = 1e-3
    if spec is not None and spec.family.is_cutoff and v_ref > 0.0:
        dt = min(dt, spec.cutoff_radius / (4.0 * v_ref))
    return min(dt, params.T)


def step_schedule(T: float, dt: float) -> list[float]:
    """Step lengths: full dt steps with the last one shortened to hit T."""
    nsteps = max(1, math.ceil(T / dt - 1e-12))
    lengths = [dt] * (nsteps - 1)
    lengths.append(T - dt * (nsteps - 1))
    return lengths


def _em_step(x, v, drift, h, noise_amp, noise) -> None:
    """One Euler-Maruyama step in place; position uses the pre-step velocity."""
    x += h * v
    v += h * drift
    if noise_amp != 0.0:
        v += noise_amp * noise


def step_interacting(ens: Ensemble, spec: KernelSpec, params: SimParams,
                     stream: Stream, step_index: int | None = None,
                     h: float | None = None) -> Ensemble:
    """One step of the interacting N-body system (fresh ensemble returned)."""
    x, v = _to_state(ens)
    drift = np.empty_like(x)
    _accumulate_field(x, x, spec, drift)
    k = _step_of(ens, params, spec, step_index)
    h = h if h is not None else resolve_dt(params, spec, float(np.sqrt(np.mean(v * v) * ens.d)))
    noise = stream.step_gaussians(k, ens.n, ens.d).T if params.sigma > 0 else None
    _em_step(x, v, drift, h, math.sqrt(2.0 * params.sigma * h) if params.sigma > 0 else 0.0, noise)
    _check_finite(x, v, k, ens.t + h, "interacting")
    return _to_ensemble(x, v, ens.t + h)


def step_reference(ens: Ensemble, pilot: Ensemble, spec: KernelSpec, params: SimParams,
                   stream: Stream, step_index: int | None = None,
                   h: float | None = None) -> Ensemble:
    """One step of the reference copies, driven by the pilot's empirical field."""
    if pilot.t != ens.t:
        raise ValueError("pilot and reference times must agree")
    x, v = _to_state(ens)
    px, _ = _to_state(pilot)
    drift = np.empty_like(x)
    _accumulate_field(x, px, spec, drift)
    k = _step_of(ens, params, spec, step_index)
    h = h if h is not None else resolve_dt(params, spec, float(np.sqrt(np.mean(v * v) * ens.d)))
    noise = stream.step_gaussians(k, ens.n, ens.d).T if params.sigma > 0 else None
    _em_step(x, v, drift, h, math.sqrt(2.0 * params.sigma * h) if params.sigma > 0 else 0.0, noise)
    _check_finite(x, v, k, ens.t + h, "reference")
    return _to_ensemble(x, v, ens.t + h)


def reference_drift(ens: Ensemble, pilot: Ensemble, spec: KernelSpec) -> np.ndarray:
    """Drift field (N, d) that step_reference would apply (diagnostic)."""
    x, _ = _to_state(ens)
    px, _ = _to_state(pilot)
    drift = np.empty_like(x)
    _accumulate_field(x, px, spec, drift)
    return np.ascontiguousarray(drift.T)


def _step_of(ens: Ensemble, params: SimParams, spec: KernelSpec | None, step_index) -> int:
    if step_index is not None:
        return int(step_index)
    dt = params.dt if params.dt is not None else resolve_dt(params, spec, 1.0)
    return int(math.floor(ens.t / dt + 0.5))


# ------------------------------------------------------------ coupled evolution

@dataclass
class CoupledTrajectory:
    """Snapshots of a coupled run at the requested observation times."""

    snapshots: list[CoupledRun]
    times: list[float]
    dt: float
    spec: KernelSpec
    params: SimParams

    def at(self, t: float) -> CoupledRun:
        i = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        return self.snapshots[i]


def run_coupled(spec: KernelSpec, params: SimParams, law: InitialLaw, n: int, m: int,
                observation_times: list[float] | None = None, replica: int = 0,
                coupled_stream: Stream | None = None,
                pilot_stream: Stream | None = None,
                pilot: Ensemble | None = None) -> CoupledTrajectory:
    """Evolve pilot, interacting, and reference systems from 0 to T.

    Interacting and reference share initial data and per-particle noise;
    the pilot runs on its own stream (or can be injected pre-built for
    surrogate-sharing setups and null tests).
    """
    if m < n:
        raise ValueError("pilot size M must be at least N")
    cs = coupled_stream or Stream(params.seed, ROLE_COUPLED, replica)
    ps = pilot_stream or Stream(params.seed, ROLE_PILOT, 0)
    ens0 = sample_initial(law, n, spec.d, cs)
    if pilot is not None:
        if pilot.n != m or pilot.t != 0.0:
            raise ValueError("injected pilot must have size M and time 0")
        pil0 = pilot.copy()
    else:
        pil0 = sample_initial(law, m, spec.d, ps)

    xi, vi = _to_state(ens0)
    xr, vr = xi.copy(), vi.copy()
    xp, vp = _to_state(pil0)

    v_ref = float(np.sqrt(np.mean(vp * vp) * spec.d))
    dt = resolve_dt(params, spec, v_ref)
    lengths = step_schedule(params.T, dt)
    obs = sorted(observation_times) if observation_times else [params.T]

    d = spec.d
    drift_i = np.empty_like(xi)
    drift_r = np.empty_like(xr)
    drift_p = np.empty_like(xp)
    amp = lambda h: math.sqrt(2.0 * params.sigma * h) if params.sigma > 0 else 0.0

    snapshots: list[CoupledRun] = []
    times: list[float] = []
    t = 0.0
    next_obs = 0

    def record(t_now: float):
        snapshots.append(CoupledRun(
            interacting=_to_ensemble(xi, vi, t_now),
            reference=_to_ensemble(xr, vr, t_now),
            pilot=_to_ensemble(xp, vp, t_now),
            coupled_stream=cs, pilot_stream=ps,
        ))
        times.append(t_now)

    while next_obs < len(obs) and obs[next_obs] <= 1e-15:
        record(0.0)
        next_obs += 1

    for k, h in enumerate(lengths):
        _accumulate_field(xp, xp, spec, drift_p)
        _accumulate_field(xi, xi, spec, drift_i)
        _accumulate_field(xr, xp, spec, drift_r)
        a = amp(h)
        gi = cs.step_gaussians(k, n, d).T if a else None
        gp = ps.step_gaussians(k, m, d).T if a else None
        _em_step(xp, vp, drift_p, h, a, gp)
        _em_step(xi, vi, drift_i, h, a, gi)
        _em_step(xr, vr, drift_r, h, a, gi)
        t += h
        _check_finite(xi, vi, k, t, "interacting")
        _check_finite(xr, vr, k, t, "reference")
        _check_finite(xp, vp, k, t, "pilot")
        while next_obs < len(obs) and t >= obs[next_obs] - 1e-12:
            record(t)
            next_obs += 1

    return CoupledTrajectory(snapshots, times, dt, spec, params)


def set_worker_threads(count: int) -> int:
    """Set the numba worker count; 0 keeps the current maximum. Returns it."""
    if count > 0:
        numba.set_num_threads(min(count, numba.config.NUMBA_NUM_THREADS))
    return numba.get_num_threads()
