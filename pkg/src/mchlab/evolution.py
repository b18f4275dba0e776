"""Pseudospectral time stepping of the mCH equation and experiments built on it.

The equation is advanced in the conservative form

    m_t = -((u^2 - u_x^2 - V) m)_x,    u - u_xx = m,

on a periodic grid, optionally in a frame moving with speed V. The flux
form keeps the discrete mean of m (the first invariant) fixed to rounding.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field, replace

import numpy as np
from scipy.optimize import minimize

from .errors import (BlowUp, NumericalFailure, OptimizerStall, PositivityLost,
                     PositivityViolated, ValidationError)
from .fields import GridField, _wavenumbers, default_box, sample_two_soliton, sobolev_norm
from .functionals import NAMES, ConservedReport, conserved_report
from .soliton import collision_phase_shift, one_soliton_constants

__all__ = [
    "EvolutionConfig",
    "TrajectorySample",
    "Trajectory",
    "rhs",
    "advisory_dt",
    "evolve",
    "conservation_drift",
    "OrbitalFit",
    "orbital_distance",
    "crest_positions",
    "CollisionReport",
    "collision_config",
    "collision_experiment",
    "StabilityReport",
    "sech2_bump",
    "stability_experiment",
]


@dataclass(frozen=True)
class EvolutionConfig:
    """Grid, time stepping and output settings for one run.

    Times are absolute: the run goes from ``t0`` to ``t_end`` with a fixed
    step of size close to ``|dt|`` (adjusted to land on ``t_end``).
    """

    half_width: float
    n: int
    dt: float
    t_end: float
    t0: float = 0.0
    dealias_fraction: float = 2.0 / 3.0
    output_stride: int = 100
    positivity_floor: float | None = None
    frame_speed: float = 0.0

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValidationError("half_width must be positive")
        if self.n < 16 or self.n % 2:
            raise ValidationError("n must be an even integer >= 16")
        if not self.dt > 0:
            raise ValidationError("dt must be positive")
        if not 0 < self.dealias_fraction <= 1:
            raise ValidationError("dealias_fraction must lie in (0, 1]")
        if self.output_stride < 1:
            raise ValidationError("output_stride must be >= 1")

    @property
    def h(self):
        return 2 * self.half_width / self.n

    def steps(self):
        span = self.t_end - self.t0
        count = max(1, math.ceil(abs(span) / self.dt - 1e-9))
        return count, span / count

    def floor(self, kappa):
        return 1e-10 * kappa if self.positivity_floor is None else self.positivity_floor

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True, eq=False)
class TrajectorySample:
    t: float
    field: GridField
    conserved: ConservedReport
    min_m: float
    orbital: dict | None = None


@dataclass(eq=False)
class Trajectory:
    config: EvolutionConfig
    samples: list = dc_field(default_factory=list)
    status: str = "ok"  # "ok", "positivity_lost" or "blow_up"
    failure_time: float | None = None
    message: str = ""

    @property
    def final(self):
        return self.samples[-1]

    @property
    def times(self):
        return np.array([s.t for s in self.samples])

    def check(self):
        """Raise the recorded failure, if any."""
        if self.status == "positivity_lost":
            raise PositivityLost(self.message)
        if self.status == "blow_up":
            raise BlowUp(self.message)
        return self


# --------------------------------------------------------------------------
# right-hand side


class _Operator:
    """Precomputed spectral symbols for one periodic grid."""

    def __init__(self, n, h, dealias_fraction, frame_speed):
        k = _wavenumbers(n, h)
        self.n = n
        self.ik = 1j * k
        self.ik[-1] = 0.0  # Nyquist
        self.helm = 1.0 / (1.0 + k**2)
        self.mask = (np.abs(k) <= dealias_fraction * np.max(np.abs(k))).astype(float)
        self.V = frame_speed

    def project(self, m):
        return np.fft.irfft(np.fft.rfft(m) * self.mask, self.n)

    def __call__(self, m):
        mh = np.fft.rfft(m) * self.mask
        uh = mh * self.helm
        u = np.fft.irfft(uh, self.n)
        ux = np.fft.irfft(self.ik * uh, self.n)
        mm = np.fft.irfft(mh, self.n)
        flux = (u * u - ux * ux - self.V) * mm
        return -np.fft.irfft(self.ik * self.mask * np.fft.rfft(flux), self.n)


def rhs(field, dealias_fraction=2.0 / 3.0, frame_speed=0.0):
    """Time derivative of m for a periodic field."""
    if not field.periodic:
        raise ValidationError("rhs needs a periodic field")
    if not np.all(field.m > 0):
        raise PositivityViolated("rhs needs m > 0")
    return _Operator(field.n, field.h, dealias_fraction, frame_speed)(field.m)


def advisory_dt(field, frame_speed=0.0, safety=0.5):
    """``safety * h / max|u^2 - u_x^2 - V|`` on the given state."""
    op = _Operator(field.n, field.h, 1.0, frame_speed)
    uh = np.fft.rfft(field.m) * op.helm
    u, ux = np.fft.irfft(uh, field.n), np.fft.irfft(op.ik * uh, field.n)
    speed = float(np.max(np.abs(u * u - ux * ux - frame_speed)))
    return safety * field.h / max(speed, 1e-300)


# --------------------------------------------------------------------------
# time stepping


def _sample(t, m, template):
    fld = replace(template, m=m.copy(), derivs=None)
    return TrajectorySample(float(t), fld, conserved_report(fld), float(np.min(m)))


def evolve(m0, config, strict=False, callback=None):
    """Classical RK4 from ``config.t0`` to ``config.t_end``.

    Samples are kept every ``output_stride`` steps and at the end. A
    non-positive or non-finite state stops the run; the partial trajectory
    is returned with ``status`` set, or the error is raised when ``strict``.
    ``callback(sample)`` may return a dict stored as the sample's
    ``orbital`` record.
    """
    if not m0.periodic:
        raise ValidationError("evolution needs a periodic field")
    if m0.n != config.n or not math.isclose(m0.h, config.h, rel_tol=1e-12):
        raise ValidationError("initial field does not match the configured grid")
    if not np.all(np.isfinite(m0.m)):
        raise ValidationError("initial field is not finite")
    m0.check_positive()
    if config.dt > advisory_dt(m0, config.frame_speed) * (1 + 1e-12):
        warnings.warn("dt exceeds the advisory stability bound", RuntimeWarning, stacklevel=2)
    op = _Operator(config.n, config.h, config.dealias_fraction, config.frame_speed)
    floor = config.floor(m0.kappa)
    template = replace(m0, derivs=None)
    traj = Trajectory(config)

    def keep(t, m):
        s = _sample(t, m, template)
        if callback is not None:
            s = replace(s, orbital=callback(s))
        traj.samples.append(s)

    m = op.project(m0.m)
    count, dt = config.steps()
    t = config.t0
    keep(t, m)
    for step in range(1, count + 1):
        k1 = op(m)
        k2 = op(m + 0.5 * dt * k1)
        k3 = op(m + 0.5 * dt * k2)
        k4 = op(m + dt * k3)
        m = m + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = config.t0 + step * dt
        if not np.all(np.isfinite(m)):
            traj.status, traj.failure_time = "blow_up", t
            traj.message = f"non-finite values at t = {t:.6g}"
            break
        if np.min(m) <= floor:
            traj.status, traj.failure_time = "positivity_lost", t
            traj.message = f"min m = {np.min(m):.3e} at t = {t:.6g}"
            break
        if step % config.output_stride == 0 or step == count:
            keep(t, m)
    if strict:
        try:
            traj.check()
        except NumericalFailure as exc:
            exc.trajectory = traj
            raise
    return traj


def conservation_drift(trajectory):
    """Max relative change of each invariant along the stored samples."""
    samples = trajectory.samples if isinstance(trajectory, Trajectory) else list(trajectory)
    if len(samples) < 2:
        raise ValidationError("need at least two samples")
    first = samples[0].conserved.values()
    out = {}
    for name in NAMES:
        ref = first[name]
        out[name] = max(abs(s.conserved.values()[name] - ref) for s in samples) / (abs(ref) + 1e-30)
    return out


# --------------------------------------------------------------------------
# orbital distance


@dataclass(frozen=True)
class OrbitalFit:
    distance: float
    y10: float
    y20: float
    converged: bool = True
    evaluations: int = 0

    def to_dict(self):
        return {"distance": self.distance, "y10": self.y10, "y20": self.y20,
                "converged": self.converged, "evaluations": self.evaluations}


def orbital_distance(field, params, t, guess=None, frame_speed=0.0, grid_points=21,
                     xatol=1e-10, strict=False):
    """H^2 distance from ``field`` to the 2-soliton family at time t.

    The phases are fitted by a coarse search over +-2 widths around
    ``guess`` (skipped when a guess is given and ``grid_points`` is 0)
    followed by Nelder-Mead.
    """
    periodic = field.periodic

    def dist2(phases):
        member = sample_two_soliton(params.with_phases(*phases), t, field.x0, field.h,
                                    field.n, order=0, periodic=periodic,
                                    frame_speed=frame_speed)
        return sobolev_norm(field.m - member.m, field.h, 2, periodic=periodic) ** 2

    centre = np.array(guess if guess is not None else (params.y10, params.y20), dtype=float)
    widths = np.array([1 / params.k1, 1 / params.k2])
    start, evals = centre, 0
    if grid_points:
        offs = np.linspace(-2, 2, grid_points)
        best = math.inf
        for a in offs:
            for b in offs:
                trial = centre + widths * (a, b)
                v = dist2(trial)
                evals += 1
                if v < best:
                    best, start = v, trial
        step = 4 * widths / (grid_points - 1)
    else:
        step = 0.05 * widths
    simplex = np.array([start, start + (step[0], 0), start + (0, step[1])])
    res = minimize(dist2, start, method="Nelder-Mead",
                   options=dict(xatol=xatol, fatol=1e-16, maxiter=2000, maxfev=4000,
                                initial_simplex=simplex))
    evals += res.nfev
    fit = OrbitalFit(math.sqrt(max(res.fun, 0.0)), float(res.x[0]), float(res.x[1]),
                     bool(res.success), evals)
    if strict and not res.success:
        raise OptimizerStall(res.message)
    return fit


# --------------------------------------------------------------------------
# crests


def _fourier_eval(mh, n, h, x0, xs, order):
    k = _wavenumbers(n, h)
    weight = np.full(mh.size, 2.0)
    weight[0] = 1.0
    weight[-1] = 1.0 if n % 2 == 0 else 2.0
    phase = np.exp(1j * np.outer(np.asarray(xs) - x0, k))
    return (phase * ((1j * k) ** order * mh * weight)).real.sum(axis=1) / n


def crest_positions(field, count=2):
    """x positions and heights of the ``count`` highest local maxima of m.

    Grid maxima are refined by Newton's method on the trigonometric
    interpolant, so the positions are accurate well below h.
    """
    m = field.m
    roll_l, roll_r = np.roll(m, 1), np.roll(m, -1)
    idx = np.flatnonzero((m > roll_l) & (m >= roll_r))
    if not field.periodic:
        idx = idx[(idx > 0) & (idx < m.size - 1)]
    idx = idx[np.argsort(m[idx])[::-1][:count]]
    mh = np.fft.rfft(m)
    xs = field.x0 + field.h * idx.astype(float)
    for _ in range(30):
        d1 = _fourier_eval(mh, field.n, field.h, field.x0, xs, 1)
        d2 = _fourier_eval(mh, field.n, field.h, field.x0, xs, 2)
        step = d1 / d2
        xs = xs - step
        if np.all(np.abs(step) < 1e-13 * max(1.0, float(np.max(np.abs(xs))))):
            break
    heights = _fourier_eval(mh, field.n, field.h, field.x0, xs, 0)
    order = np.argsort(xs)
    return xs[order], heights[order]


# --------------------------------------------------------------------------
# experiments


@dataclass(frozen=True)
class CollisionReport:
    amplitudes: tuple  # measured (fast, slow) after the collision
    expected_amplitudes: tuple
    amplitude_errors: tuple
    displacement_fast: float
    predicted_fast: float
    displacement_slow: float
    predicted_slow: float
    relative_error_fast: float
    ordering_restored: bool
    final_h2_error: float
    drift: dict
    status: str

    def to_dict(self):
        return {k: (list(v) if isinstance(v, tuple) else v)
                for k, v in self.__dict__.items()}


def collision_config(params, n=8192, t_span=25.0, half_width=None, dt=None, output_stride=500):
    """Co-moving run from ``-t_span`` to ``t_span`` with frame speed ``(c1+c2)/2``."""
    V = 0.5 * (params.c1 + params.c2)
    if half_width is None:
        sep = 0.5 * (params.c1 - params.c2) * t_span + abs(collision_phase_shift(params)[1])
        half_width = sep + 30.0 / (params.kappa * params.k2)
    probe = _initial_field(params, -t_span, half_width, n, V)
    if dt is None:
        dt = advisory_dt(probe, V)
    return EvolutionConfig(half_width=half_width, n=n, dt=dt, t_end=t_span, t0=-t_span,
                           output_stride=output_stride, frame_speed=V)


def _initial_field(params, t, half_width, n, frame_speed):
    centre, _ = default_box(params, 0.0)
    h = 2 * half_width / n
    return sample_two_soliton(params, t, centre - half_width, h, n, order=0, periodic=True,
                              frame_speed=frame_speed)


def collision_experiment(params, config=None):
    """Evolve the exact 2-soliton through its collision and compare with theory."""
    if not params.c2 < params.c1:
        raise ValidationError("collision needs c2 < c1")
    config = collision_config(params) if config is None else config
    m0 = _initial_field(params, config.t0, config.half_width, config.n, config.frame_speed)
    traj = evolve(m0, config)
    first, last = traj.samples[0], traj.final
    V = config.frame_speed
    x_pre, _ = crest_positions(first.field)
    x_post, a_post = crest_positions(last.field)
    # before: fast pulse behind; after: fast pulse ahead
    span = last.t - first.t
    disp_fast = (x_post[1] - x_pre[0]) - (params.c1 - V) * span
    disp_slow = (x_post[0] - x_pre[1]) - (params.c2 - V) * span
    _, pred_fast, pred_slow = collision_phase_shift(params)
    expected = (one_soliton_constants(params.c1, params.kappa).m_max,
                one_soliton_constants(params.c2, params.kappa).m_max)
    measured = (float(a_post[1]), float(a_post[0]))
    exact = _initial_field(params, last.t, config.half_width, config.n, V)
    h2 = sobolev_norm(last.field.m - exact.m, last.field.h, 2, periodic=True)
    return CollisionReport(
        amplitudes=measured,
        expected_amplitudes=expected,
        amplitude_errors=tuple(abs(a - b) for a, b in zip(measured, expected)),
        displacement_fast=float(disp_fast),
        predicted_fast=float(pred_fast),
        displacement_slow=float(disp_slow),
        predicted_slow=float(pred_slow),
        relative_error_fast=float(abs(disp_fast - pred_fast) / abs(pred_fast)),
        ordering_restored=bool(a_post[1] > a_post[0]),
        final_h2_error=float(h2),
        drift=conservation_drift(traj),
        status=traj.status,
    ), traj


def sech2_bump(field, centre, width):
    """A sech^2 bump on the field's grid scaled to unit H^2 norm."""
    p = 1.0 / np.cosh((field.x - centre) / width) ** 2
    return p / sobolev_norm(p, field.h, 2, periodic=field.periodic)


@dataclass(frozen=True)
class StabilityReport:
    deltas: tuple
    sup_distance: tuple
    amplification: tuple
    amplification_spread: float
    initial_distance: tuple
    series: dict  # delta -> list of (t, distance)
    statuses: tuple

    def to_dict(self):
        return {
            "deltas": list(self.deltas),
            "sup_distance": list(self.sup_distance),
            "amplification": list(self.amplification),
            "amplification_spread": self.amplification_spread,
            "initial_distance": list(self.initial_distance),
            "series": {repr(d): [list(p) for p in s] for d, s in self.series.items()},
            "statuses": list(self.statuses),
        }


def stability_experiment(params, deltas=(1e-3, 2e-3, 4e-3), config=None, n=2048,
                         bump_width=None, orbital_every=None):
    """Perturb the 2-soliton by ``delta * p`` and track its orbital distance.

    The run spans ``T = 40/(c1 - c2)`` centred on the collision time, so the
    pulses approach, interact and separate. ``p`` is a unit-H^2 sech^2 bump
    midway between the pulses.
    """
    T = 40.0 / (params.c1 - params.c2)
    if config is None:
        config = collision_config(params, n=n, t_span=T / 2, output_stride=1)
    if orbital_every is None:
        orbital_every = max(1, int(round(1.0 / config.steps()[1])))
    config = replace(config, output_stride=orbital_every)
    V = config.frame_speed
    base = _initial_field(params, config.t0, config.half_width, config.n, V)
    xs, _ = crest_positions(base)
    width = 2.0 / params.kappa if bump_width is None else bump_width
    bump = sech2_bump(base, 0.5 * (xs[0] + xs[1]), width)

    series, sups, initial, statuses = {}, [], [], []
    for delta in deltas:
        m0 = replace(base, m=base.m + delta * bump)
        state = {"guess": None}

        def track(sample):
            fit = orbital_distance(sample.field, params, sample.t, guess=state["guess"],
                                   frame_speed=V, grid_points=21 if state["guess"] is None else 0)
            state["guess"] = (fit.y10, fit.y20)
            return fit.to_dict()

        traj = evolve(m0, config, callback=track)
        pts = [(s.t, s.orbital["distance"]) for s in traj.samples]
        series[delta] = pts
        sups.append(max(d for _, d in pts))
        initial.append(pts[0][1])
        statuses.append(traj.status)
    amp = tuple(s / d if d > 0 else float("nan") for s, d in zip(sups, deltas))
    finite = [a for a in amp if np.isfinite(a)]
    spread = max(finite) / min(finite) if finite else float("nan")
    return StabilityReport(tuple(deltas), tuple(sups), amp, float(spread), tuple(initial),
                           series, tuple(statuses))
