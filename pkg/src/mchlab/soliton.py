"""Exact 1- and 2-soliton solutions of the mCH equation on a background.

Solutions are parametrized through the reciprocal variable ``y`` (with
``tau == t``)::

    p = 1/kappa + 2 (ln g/f)_y,        m = 1/p,
    u = kappa - (ln f g)_{tau y},
    x = y/kappa + kappa**2 tau + 2 ln(g/f) + d,

where ``f`` and ``g`` are positive sums of exponentials in the phases
``xi_i = k_i (y - ctilde_i tau + y_i0)``. Every derivative of ``ln f`` and
``ln g`` is evaluated exactly: a directional derivative of the log of an
exponential sum is a joint cumulant of the term rates under the softmax
weights of the terms, so nothing here is finite-differenced.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq
from scipy.special import comb, logsumexp

from .errors import (
    DegenerateSpeeds,
    NonMonotoneMap,
    SpeedOrdering,
    SpeedOutOfWindow,
    SqrtDomain,
)

__all__ = [
    "SolitonParams",
    "ExponentialSum",
    "TauPair",
    "ParametricCurve",
    "OneSolitonConstants",
    "wavenumber_from_speed",
    "speed_from_wavenumber",
    "build_params",
    "tau_pair",
    "one_soliton_pair",
    "eval_curve",
    "one_soliton_curve",
    "one_soliton_constants",
    "one_soliton_u_closed_form",
    "homoclinic_oracle",
    "collision_phase_shift",
    "crest_y",
    "default_y_grid",
    "jet_mul",
    "jet_reciprocal",
    "x_derivatives",
]


# --------------------------------------------------------------------------
# parameter algebra


def _check_window(c, kappa):
    if not kappa > 0:
        raise SpeedOutOfWindow(f"background kappa must be positive, got {kappa}")
    if not 3 * kappa**2 < c < 9 * kappa**2:
        raise SpeedOutOfWindow(
            f"speed outside (3κ²,9κ²): c={c} not in ({3 * kappa**2}, {9 * kappa**2})"
        )


def wavenumber_from_speed(c, kappa):
    """Invert ``c = kappa**2 (3 - s**2) / (1 - s**2)`` with ``s = kappa k``."""
    _check_window(c, kappa)
    return math.sqrt((c - 3 * kappa**2) / (c - kappa**2)) / kappa


def speed_from_wavenumber(k, kappa):
    s2 = (kappa * k) ** 2
    return kappa**2 * (3 - s2) / (1 - s2)


@dataclass(frozen=True)
class SolitonParams:
    """Speeds, phases and the derived tau-function constants of a 2-soliton."""

    kappa: float
    c1: float
    c2: float
    y10: float
    y20: float
    d: float
    k1: float
    k2: float
    ctilde1: float
    ctilde2: float
    psi1: float
    psi2: float
    h: float

    def with_phases(self, y10, y20):
        return replace(self, y10=float(y10), y20=float(y20))

    @property
    def speeds(self):
        return (self.c1, self.c2)

    def to_dict(self):
        return {
            "kappa": self.kappa,
            "c1": self.c1,
            "c2": self.c2,
            "y10": self.y10,
            "y20": self.y20,
            "d": self.d,
            "k1": self.k1,
            "k2": self.k2,
            "ctilde1": self.ctilde1,
            "ctilde2": self.ctilde2,
            "psi1": self.psi1,
            "psi2": self.psi2,
            "h": self.h,
        }


def build_params(kappa, c1, c2, y10=0.0, y20=0.0, d=0.0):
    kappa, c1, c2 = float(kappa), float(c1), float(c2)
    _check_window(c1, kappa)
    _check_window(c2, kappa)
    if not c2 < c1:
        raise SpeedOrdering(f"speeds must satisfy c2 < c1, got c1={c1}, c2={c2}")
    k1 = wavenumber_from_speed(c1, kappa)
    k2 = wavenumber_from_speed(c2, kappa)
    if k1 == k2:
        raise DegenerateSpeeds("speeds give identical wavenumbers")
    ct1 = 2 * kappa**3 / (1 - (kappa * k1) ** 2)
    ct2 = 2 * kappa**3 / (1 - (kappa * k2) ** 2)
    psi1 = math.log((1 + kappa * k1) / (1 - kappa * k1))
    psi2 = math.log((1 + kappa * k2) / (1 - kappa * k2))
    h = math.log((k1 - k2) / (k1 + k2))
    return SolitonParams(kappa, c1, c2, float(y10), float(y20), float(d),
                         k1, k2, ct1, ct2, psi1, psi2, h)


# --------------------------------------------------------------------------
# exponential sums and their log-derivatives


@functools.lru_cache(maxsize=None)
def _cumulant_partitions(n):
    """Set partitions of range(n) without singleton blocks, with Möbius weights.

    With centred variables, the joint cumulant is the sum over these
    partitions of ``(-1)**(b-1) (b-1)! * prod(E[prod block])``.
    """
    def partitions(items):
        if not items:
            yield []
            return
        first, rest = items[0], items[1:]
        for sub in partitions(rest):
            yield [(first,)] + sub
            for i, block in enumerate(sub):
                yield sub[:i] + [(first,) + block] + sub[i + 1:]

    out = []
    for part in partitions(tuple(range(n))):
        if any(len(b) == 1 for b in part):
            continue
        b = len(part)
        out.append(((-1) ** (b - 1) * math.factorial(b - 1), tuple(part)))
    return tuple(out)


@dataclass(frozen=True)
class ExponentialSum:
    """``S = sum_j a_j exp(w_j . xi)`` with ``a_j > 0`` and integer weights ``w_j``.

    Directions for :meth:`log_derivative` are single characters: ``y`` and
    ``t`` (the reciprocal coordinates) and ``1``, ``2`` (the phases
    ``xi_1``, ``xi_2``).
    """

    coeffs: tuple
    weights: tuple
    k: tuple
    ctilde: tuple
    y0: tuple

    def __post_init__(self):
        if any(not a > 0 for a in self.coeffs):
            raise ValueError("exponential-sum coefficients must be positive")

    @property
    def n_waves(self):
        return len(self.k)

    def phases(self, y, tau):
        y = np.asarray(y, dtype=float)[..., None]
        tau = np.asarray(tau, dtype=float)[..., None]
        return np.asarray(self.k) * (y - np.asarray(self.ctilde) * tau + np.asarray(self.y0))

    def _exponents(self, y, tau):
        w = np.asarray(self.weights, dtype=float)
        return np.log(np.asarray(self.coeffs)) + self.phases(y, tau) @ w.T

    def log(self, y, tau):
        return logsumexp(self._exponents(y, tau), axis=-1)

    def value(self, y, tau):
        return np.exp(self.log(y, tau))

    def _rate(self, ch):
        w = np.asarray(self.weights, dtype=float)
        k = np.asarray(self.k)
        if ch == "y":
            v = k
        elif ch == "t":
            v = -k * np.asarray(self.ctilde)
        elif ch.isdigit() and 1 <= int(ch) <= self.n_waves:
            v = np.zeros(self.n_waves)
            v[int(ch) - 1] = 1.0
        else:
            raise ValueError(f"unknown derivative direction {ch!r}")
        return w @ v

    def log_derivatives(self, y, tau, specs):
        """Exact derivatives of ``ln S`` for each direction string in ``specs``.

        ``""`` gives ``ln S`` itself; ``"yyt"`` gives ``d^3 ln S / dy^2 dtau``.
        """
        z = self._exponents(y, tau)
        lse = logsumexp(z, axis=-1, keepdims=True)
        wts = np.exp(z - lse)
        out = []
        cache = {}
        for spec in specs:
            if spec == "":
                out.append(lse[..., 0])
                continue
            rates = [self._rate(ch) for ch in spec]
            means = [wts @ r for r in rates]
            if len(spec) == 1:
                out.append(means[0])
                continue
            centred = [r - mu[..., None] for r, mu in zip(rates, means)]
            total = 0.0
            for coef, blocks in _cumulant_partitions(len(spec)):
                term = coef
                for block in blocks:
                    key = "".join(sorted(spec[i] for i in block))
                    if key not in cache:
                        prod = 1.0
                        for i in block:
                            prod = prod * centred[i]
                        cache[key] = np.sum(wts * prod, axis=-1)
                    term = term * cache[key]
                total = total + term
            out.append(total)
        return out

    def log_derivative(self, y, tau, spec):
        return self.log_derivatives(y, tau, [spec])[0]


# --------------------------------------------------------------------------
# jets in y and transport to x


def jet_mul(a, b):
    """Leibniz product of two derivative jets (lists of arrays, order 0 first)."""
    n = min(len(a), len(b))
    return [sum(comb(k, j, exact=True) * a[j] * b[k - j] for j in range(k + 1)) for k in range(n)]


def jet_reciprocal(p):
    m = [1.0 / p[0]]
    for n in range(1, len(p)):
        s = sum(comb(n, j, exact=True) * m[j] * p[n - j] for j in range(n))
        m.append(-s * m[0])
    return m


def x_derivatives(a_jet, m_jet, order):
    """``[a, a_x, ..., a_x^order]`` from y-jets, using ``d/dx = m d/dy``."""
    out = [a_jet[0]]
    cur = list(a_jet)
    for _ in range(order):
        if len(cur) < 2:
            raise ValueError("jet too short for the requested x-order")
        cur = jet_mul(m_jet, cur[1:])
        out.append(cur[0])
    return out


# --------------------------------------------------------------------------
# tau pairs and parametric curves


@dataclass(frozen=True)
class TauPair:
    """The pair ``(f, g)`` plus the constants of the parametric map."""

    f: ExponentialSum
    g: ExponentialSum
    kappa: float
    d: float = 0.0

    def log_ratio_jet(self, y, tau, order, prefix=""):
        """``[d_prefix d_y^j ln(g/f)]`` for ``j = 0..order``."""
        specs = [prefix + "y" * j for j in range(order + 1)]
        lf = self.f.log_derivatives(y, tau, specs)
        lg = self.g.log_derivatives(y, tau, specs)
        return [b - a for a, b in zip(lf, lg)]

    def x_of_y(self, y, tau):
        y = np.asarray(y, dtype=float)
        lr = self.g.log(y, tau) - self.f.log(y, tau)
        return y / self.kappa + self.kappa**2 * tau + 2 * lr + self.d

    def p_jet(self, y, tau, order=4):
        lr = self.log_ratio_jet(y, tau, order + 1)
        p = [2 * v for v in lr[1:]]
        p[0] = p[0] + 1.0 / self.kappa
        return p

    def m_jet(self, y, tau, order=4):
        m = jet_reciprocal(self.p_jet(y, tau, order))
        if np.any(m[0] <= 0):
            raise NonMonotoneMap("non-positive momentum in parametric evaluation")
        return m

    def u_jet(self, y, tau, order=2):
        specs = ["t" + "y" * (j + 1) for j in range(order + 1)]
        lf = self.f.log_derivatives(y, tau, specs)
        lg = self.g.log_derivatives(y, tau, specs)
        u = [-(a + b) for a, b in zip(lf, lg)]
        u[0] = u[0] + self.kappa
        return u

    def curve(self, tau, y):
        y = np.asarray(y, dtype=float)
        if y.ndim != 1 or np.any(np.diff(y) <= 0):
            raise ValueError("y grid must be one-dimensional and strictly increasing")
        m = self.m_jet(y, tau, 4)
        u = self.u_jet(y, tau, 1)
        x = self.x_of_y(y, tau)
        if np.any(np.diff(x) <= 0):
            raise NonMonotoneMap("x(y) is not strictly increasing")
        return ParametricCurve(tau=float(tau), y=y, x=x, u=u[0], m=m[0],
                               m_y_derivs=tuple(m[1:]), u_y=u[1], source=self)

    def y_bracket(self, x_lo, x_hi, tau):
        """A y-interval whose image under x(., tau) contains [x_lo, x_hi]."""
        # 2 ln(g/f) lies between -2 sum(psi) and 0, so x - y/kappa is bounded
        log_ratio_min = sum(math.log(a) for a in self.g.coeffs if a < 1.0)
        spread = abs(2 * self.kappa * log_ratio_min) + 2 * self.kappa
        base = self.kappa * (np.array([x_lo, x_hi]) - self.kappa**2 * tau - self.d)
        return base[0] - 2 * self.kappa, base[1] + spread

    def invert_x(self, x_targets, tau, y_guess=None, maxiter=50):
        """Solve ``x(y, tau) = x_target`` by Newton's method (x_y = p > 0)."""
        xt = np.asarray(x_targets, dtype=float)
        if y_guess is None:
            lo, hi = self.y_bracket(xt.min(), xt.max(), tau)
            ys = np.linspace(lo, hi, max(2 * xt.size, 256))
            xs = self.x_of_y(ys, tau)
            y = PchipInterpolator(xs, ys)(xt)
        else:
            y = np.array(y_guess, dtype=float)
        scale = max(1.0, float(np.max(np.abs(xt))))
        for _ in range(maxiter):
            lr = self.log_ratio_jet(y, tau, 1)
            resid = y / self.kappa + self.kappa**2 * tau + 2 * lr[0] + self.d - xt
            p = 1.0 / self.kappa + 2 * lr[1]
            step = resid / p
            y = y - step
            if np.max(np.abs(resid)) < 4e-16 * scale:
                break
        return y


@dataclass(frozen=True, eq=False)
class ParametricCurve:
    """Samples of the exact solution along a strictly increasing y grid."""

    tau: float
    y: np.ndarray
    x: np.ndarray
    u: np.ndarray
    m: np.ndarray
    m_y_derivs: tuple
    u_y: np.ndarray
    source: TauPair | None = field(default=None, repr=False)

    @property
    def kappa(self):
        return self.source.kappa

    def m_jet(self):
        return [self.m, *self.m_y_derivs]

    def m_x_derivatives(self, order=4):
        return x_derivatives(self.m_jet(), self.m_jet(), order)

    @property
    def u_x(self):
        return self.m * self.u_y


def tau_pair(params):
    """The 2-soliton tau functions ``f`` and ``g``."""
    e2h = math.exp(2 * params.h)
    ep1, ep2 = math.exp(-params.psi1), math.exp(-params.psi2)
    weights = ((0, 0), (1, 0), (0, 1), (1, 1))
    wave = dict(k=(params.k1, params.k2), ctilde=(params.ctilde1, params.ctilde2),
                y0=(params.y10, params.y20))
    f = ExponentialSum(coeffs=(1.0, 1.0, 1.0, e2h), weights=weights, **wave)
    g = ExponentialSum(coeffs=(1.0, ep1, ep2, e2h * ep1 * ep2), weights=weights, **wave)
    return f, g


def _pair(params):
    f, g = tau_pair(params)
    return TauPair(f, g, params.kappa, params.d)


def one_soliton_pair(c, kappa, y0=0.0, d=0.0):
    k = wavenumber_from_speed(c, kappa)
    ct = 2 * kappa**3 / (1 - (kappa * k) ** 2)
    emp = (1 - kappa * k) / (1 + kappa * k)
    wave = dict(k=(k,), ctilde=(ct,), y0=(float(y0),))
    f = ExponentialSum(coeffs=(1.0, 1.0), weights=((0,), (1,)), **wave)
    g = ExponentialSum(coeffs=(1.0, emp), weights=((0,), (1,)), **wave)
    return TauPair(f, g, float(kappa), float(d))


def default_y_grid(params, tau=0.0, n=8192, half_width=None):
    """Uniform y grid centred on the slow soliton at time ``tau``."""
    if half_width is None:
        half_width = 60.0 / params.k2
    centre = params.ctilde2 * tau - params.y20
    return np.linspace(centre - half_width, centre + half_width, n)


def eval_curve(params, tau, y_grid=None):
    if y_grid is None:
        y_grid = default_y_grid(params, tau)
    return _pair(params).curve(tau, y_grid)


def one_soliton_curve(c, kappa, y_grid, tau=0.0, y0=0.0, d=0.0):
    return one_soliton_pair(c, kappa, y0, d).curve(tau, y_grid)


# --------------------------------------------------------------------------
# single-soliton closed forms and the homoclinic orbit


@dataclass(frozen=True)
class OneSolitonConstants:
    c: float
    kappa: float
    A: float
    E: float
    xi0: float
    phi0: float

    @property
    def u_max(self):
        return self.kappa + (self.c - self.kappa**2) * self.phi0 / (4 * self.kappa)

    @property
    def m_max(self):
        return self.A / math.sqrt(self.E - 4 * self.A * self.u_max)


def one_soliton_constants(c, kappa):
    k = wavenumber_from_speed(c, kappa)
    A = kappa * (c - kappa**2)
    E = (c - kappa**2) * (c + 3 * kappa**2)
    xi0 = 0.5 * math.log((1 + kappa * k) / (1 - kappa * k))
    phi0 = 4 * kappa * (math.sqrt(2 * (c - kappa**2)) - 2 * kappa) / (c - kappa**2)
    return OneSolitonConstants(float(c), float(kappa), A, E, xi0, phi0)


def one_soliton_u_closed_form(c, kappa, xi):
    """The cosh form of the 1-soliton velocity as a function of its phase."""
    k = wavenumber_from_speed(c, kappa)
    ct = 2 * kappa**3 / (1 - (kappa * k) ** 2)
    s = math.sqrt(1 - (kappa * k) ** 2)
    xi0 = 0.5 * math.log((1 + kappa * k) / (1 - kappa * k))
    ch = np.cosh(np.asarray(xi, dtype=float) - xi0)
    return kappa + k**2 * ct * s * (ch + s) / (1 + s * ch) ** 2


def homoclinic_oracle(phi, phi_x, c, kappa):
    """Residual of the homoclinic first integral and the momentum it implies.

    Returns ``(phi**2 - phi_x**2 - c + sqrt(E - 4 A phi), A / sqrt(E - 4 A phi))``.
    """
    A = kappa * (c - kappa**2)
    E = (c - kappa**2) * (c + 3 * kappa**2)
    disc = E - 4 * A * np.asarray(phi, dtype=float)
    if np.any(disc <= 0):
        raise SqrtDomain("E - 4 A phi must be positive on the homoclinic orbit")
    root = np.sqrt(disc)
    return phi**2 - phi_x**2 - c + root, A / root


def crest_y(pair, tau, y_lo, y_hi):
    """Location of the maximum of u on [y_lo, y_hi] (root of the exact u_y)."""
    ys = np.linspace(y_lo, y_hi, 257)
    u = pair.u_jet(ys, tau, 0)[0]
    i = int(np.clip(np.argmax(u), 1, ys.size - 2))

    def u_y(yy):
        return float(pair.u_jet(np.array([yy]), tau, 1)[1][0])

    return brentq(u_y, ys[i - 1], ys[i + 1], xtol=1e-14, rtol=1e-15)


def collision_phase_shift(params):
    """Phase shift of the fast soliton and the x-displacement it implies.

    Returns ``(delta, dx_fast, dx_slow)`` where ``delta = 2 ln((k1-k2)/(k1+k2))``.
    The displacements come from evaluating the asymptotic parametric maps
    of each soliton before and after the interaction at the crest phase and
    differencing: after the collision ``f`` and ``g`` near the fast soliton
    are dominated by ``e^{xi2}`` terms, which shifts its phase by ``delta``
    and its x position by ``-2 psi2``.
    """
    k1, k2, kappa = params.k1, params.k2, params.kappa
    if k1 <= k2:
        raise DegenerateSpeeds("collision phase shift needs k1 > k2")
    delta = 2 * math.log((k1 - k2) / (k1 + k2))

    def asymptotic_x(xi, k, psi, shift, offset):
        # x - c t as a function of the crest phase of one isolated soliton
        z = xi + shift
        return xi / (kappa * k) + 2 * (np.logaddexp(0, z - psi) - np.logaddexp(0, z)) + offset

    xi0_1 = 0.5 * params.psi1
    pre = asymptotic_x(xi0_1, k1, params.psi1, 0.0, 0.0)
    post = asymptotic_x(xi0_1 - delta, k1, params.psi1, delta, -2 * params.psi2)
    dx_fast = float(post - pre)

    xi0_2 = 0.5 * params.psi2
    pre2 = asymptotic_x(xi0_2 - delta, k2, params.psi2, delta, -2 * params.psi1)
    post2 = asymptotic_x(xi0_2, k2, params.psi2, 0.0, 0.0)
    dx_slow = float(post2 - pre2)
    return delta, dx_fast, dx_slow
