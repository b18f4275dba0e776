"""Momentum fields on uniform x grids.

A :class:`GridField` is either a truncated-line field (tails at the
background ``kappa``) or a periodic field. Spectral operations treat a line
field as one period of its periodic extension, which is accurate because
the tails have decayed to the background.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator

from .errors import GridMismatch, PositivityViolated, RangeExceeded
from .soliton import _pair, one_soliton_pair, x_derivatives

__all__ = [
    "GridField",
    "resample",
    "resample_at",
    "sample_two_soliton",
    "sample_one_soliton",
    "default_box",
    "spectral_derivatives",
    "helmholtz_velocity",
    "sobolev_norm",
    "sobolev_distance",
    "x_derivative_check",
    "integrate",
    "write_field_csv",
    "read_field_csv",
]


@dataclass(frozen=True, eq=False)
class GridField:
    x0: float
    h: float
    m: np.ndarray
    kappa: float
    derivs: tuple | None = None
    periodic: bool = False

    @property
    def n(self):
        return self.m.size

    @property
    def x(self):
        return self.x0 + self.h * np.arange(self.n)

    @property
    def length(self):
        """Period for periodic fields, span ``(n-1) h`` for line fields."""
        return self.n * self.h if self.periodic else (self.n - 1) * self.h

    def same_grid(self, other):
        return (self.n == other.n and math.isclose(self.x0, other.x0, abs_tol=1e-12)
                and math.isclose(self.h, other.h, rel_tol=1e-12)
                and self.periodic == other.periodic)

    def check_positive(self):
        if not np.all(self.m > 0):
            raise PositivityViolated(f"min m = {float(np.min(self.m)):.3e} is not positive")

    def with_spectral_derivatives(self, order=4):
        return replace(self, derivs=tuple(spectral_derivatives(self.m, self.h, order)[1:]))

    def derivatives(self, order):
        """``[m, m_x, ..., m_x^order]``; spectral if none are stored."""
        if self.derivs is not None and len(self.derivs) >= order:
            return [self.m, *self.derivs[:order]]
        return spectral_derivatives(self.m, self.h, order)


# --------------------------------------------------------------------------
# sampling exact solutions


def default_box(params, t=0.0, half_width=None):
    """Centre and half-width of an x box holding both solitons at time t."""
    if half_width is None:
        half_width = max(60.0 / params.k2, 30.0 / params.kappa)
    kap = params.kappa
    centres = []
    for k, ct, y0 in ((params.k1, params.ctilde1, params.y10),
                      (params.k2, params.ctilde2, params.y20)):
        y = 0.5 * math.log((1 + kap * k) / (1 - kap * k)) / k + ct * t - y0
        centres.append(y / kap + kap**2 * t + params.d)
    centre = 0.5 * (centres[0] + centres[1]) - (params.psi1 + params.psi2) / 2
    return centre, half_width


def _eval_at(pair, y, tau, order):
    m_jet = pair.m_jet(y, tau, order)
    return x_derivatives(m_jet, m_jet, order)


def resample_at(curve, x_targets, exact=True, order=4):
    """``[m, m_x, ..., m_x^order]`` of a parametric curve at arbitrary x.

    The inverse map y(x) is first interpolated monotonically (x(y) is
    strictly increasing). With ``exact`` and a curve that carries its tau
    pair, each y is then polished by Newton's method and the momentum and
    its x-derivatives are evaluated exactly there. Otherwise the x-derivative
    arrays are transported along the samples (d/dx = m d/dy) and
    interpolated by cubic Hermite splines in y.
    """
    xt = np.asarray(x_targets, dtype=float)
    if xt.min() < curve.x[0] or xt.max() > curve.x[-1]:
        raise RangeExceeded(
            f"x-range [{xt.min()}, {xt.max()}] not covered by curve [{curve.x[0]}, {curve.x[-1]}]")
    y_of_x = PchipInterpolator(curve.x, curve.y)(xt)
    if exact and curve.source is not None:
        y = curve.source.invert_x(xt, curve.tau, y_guess=y_of_x)
        return _eval_at(curve.source, y, curve.tau, order)
    m_jet = curve.m_jet()
    on_samples = x_derivatives(m_jet, m_jet, min(order + 1, len(m_jet) - 1))
    ders = []
    for j in range(order + 1):
        if j + 1 < len(on_samples):
            slope = on_samples[j + 1] / curve.m  # d/dy = (1/m) d/dx
        else:
            slope = np.gradient(on_samples[j], curve.y, edge_order=2)
        ders.append(CubicHermiteSpline(curve.y, on_samples[j], slope)(y_of_x))
    return ders


def resample(curve, x0, h, n, exact=True, order=4):
    """Sample a parametric curve on the uniform grid ``x0 + h*j``."""
    ders = resample_at(curve, x0 + h * np.arange(n), exact, order)
    if np.any(ders[0] <= 0):
        raise PositivityViolated("resampled momentum is not positive")
    return GridField(float(x0), float(h), ders[0], curve.kappa, tuple(ders[1:]), False)


def _sample_pair(pair, t, x0, h, n, order, periodic):
    xt = x0 + h * np.arange(n)
    y = pair.invert_x(xt, t)
    ders = _eval_at(pair, y, t, order)
    return GridField(float(x0), float(h), ders[0], pair.kappa,
                     tuple(ders[1:]) if order > 0 else None, periodic)


def sample_two_soliton(params, t, x0, h, n, order=4, periodic=False, frame_speed=0.0):
    """Exact 2-soliton momentum at time t on the grid ``x0 + h*j``.

    With ``frame_speed`` V the grid is read as co-moving coordinates
    ``x' = x - V t``.
    """
    field = _sample_pair(_pair(params), t, x0 + frame_speed * t, h, n, order, periodic)
    return replace(field, x0=float(x0))


def sample_one_soliton(c, kappa, t, x0, h, n, y0=0.0, d=0.0, order=4, periodic=False,
                       frame_speed=0.0):
    pair = one_soliton_pair(c, kappa, y0, d)
    field = _sample_pair(pair, t, x0 + frame_speed * t, h, n, order, periodic)
    return replace(field, x0=float(x0))


# --------------------------------------------------------------------------
# spectral calculus


def _wavenumbers(n, h):
    return 2 * np.pi * np.fft.rfftfreq(n, d=h)


def spectral_derivatives(m, h, order):
    """``[m, m_x, ..., m_x^order]`` by FFT on the periodic extension."""
    m = np.asarray(m, dtype=float)
    n = m.size
    mh = np.fft.rfft(m)
    ik = 1j * _wavenumbers(n, h)
    if n % 2 == 0:
        ik[-1] = 0.0  # Nyquist mode has no consistent odd derivative
    out = [m]
    for j in range(1, order + 1):
        out.append(np.fft.irfft(mh * ik**j, n))
    return out


def helmholtz_velocity(field):
    """Solve ``u - u_xx = m`` spectrally; constants map to themselves."""
    n = field.n
    k = _wavenumbers(n, field.h)
    return np.fft.irfft(np.fft.rfft(field.m) / (1.0 + k**2), n)


def integrate(values, h):
    """Composite Simpson rule on a uniform grid."""
    return float(simpson(values, dx=h))


def sobolev_norm(values, h, s=2, periodic=True):
    values = np.asarray(values, dtype=float)
    if periodic:
        n = values.size
        k = _wavenumbers(n, h)
        F = np.fft.rfft(values)
        weight = sum(k ** (2 * j) for j in range(s + 1))
        mult = np.full(F.size, 2.0)
        mult[0] = 1.0
        if n % 2 == 0:
            mult[-1] = 1.0
        return math.sqrt(float(np.sum(mult * weight * np.abs(F) ** 2)) * h / n)
    total = 0.0
    d = values
    for j in range(s + 1):
        total += integrate(d**2, h)
        d = np.gradient(d, h, edge_order=2)
    return math.sqrt(total)


def sobolev_distance(a, b, s=2):
    """Discrete H^s distance; Fourier symbol on periodic grids."""
    if not a.same_grid(b):
        raise GridMismatch("fields live on different grids")
    if s not in (0, 1, 2):
        raise ValueError("Sobolev order must be 0, 1 or 2")
    return sobolev_norm(a.m - b.m, a.h, s, periodic=a.periodic)


def x_derivative_check(curve, c):
    """Max of ``|m_x - 2 A^{-1} phi_x m^3|`` on a 1-soliton curve."""
    A = curve.kappa * (c - curve.kappa**2)
    m_x = curve.m * curve.m_y_derivs[0]
    return float(np.max(np.abs(m_x - 2.0 / A * curve.u_x * curve.m**3)))


# --------------------------------------------------------------------------
# CSV snapshots


_DERIV_NAMES = ("mx", "mxx", "mxxx", "mxxxx")


def write_field_csv(field, path):
    header = ["x", "m"]
    cols = [field.x, field.m]
    if field.derivs is not None:
        header += list(_DERIV_NAMES[: len(field.derivs)])
        cols += list(field.derivs)
    with open(path, "w", newline="") as fh:
        fh.write(f"# kappa={field.kappa!r} h={field.h!r} periodic={int(field.periodic)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([format(float(v), ".17g") for v in row])


def read_field_csv(path):
    with open(path, newline="") as fh:
        meta = fh.readline().lstrip("#").split()
        info = dict(item.split("=", 1) for item in meta)
        rows = list(csv.reader(fh))
    header, data = rows[0], np.array(rows[1:], dtype=float)
    cols = {name: data[:, i] for i, name in enumerate(header)}
    derivs = tuple(cols[nm] for nm in _DERIV_NAMES if nm in cols) or None
    x = cols["x"]
    return GridField(float(x[0]), float(info["h"]), cols["m"], float(info["kappa"]),
                     derivs, bool(int(info["periodic"])))
