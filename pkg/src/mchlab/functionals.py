"""Conserved integrals, their soliton closed forms, gradients and multipliers."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import PositivityViolated, SpeedOrdering
from .fields import integrate
from .soliton import _check_window

__all__ = [
    "ConservedReport",
    "LagrangePair",
    "conserved_densities",
    "conserved_report",
    "closed_form_invariants",
    "two_soliton_invariants",
    "soliton_ratios",
    "lagrange_multipliers",
    "gradient_G",
    "criticality_residual",
]

NAMES = ("E1", "E2", "E3", "E4", "F1", "F2", "F3")


@dataclass(frozen=True)
class ConservedReport:
    E1: float
    E2: float
    E3: float
    E4: float
    F1: float
    F2: float
    F3: float
    quadrature_error_estimates: dict

    def values(self):
        return {name: getattr(self, name) for name in NAMES}

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class LagrangePair:
    lambda1: float
    lambda2: float


def conserved_densities(m, m_x, m_xx, kappa):
    """Background-subtracted integrands of E1..E4 and F1..F3."""
    k = kappa
    dm = m - k
    E1 = dm
    E2 = -dm / (m * k)
    E3 = m_x**2 / m**5 + (k**3 - m**3) / (4 * m**3 * k**3)
    grad4 = m_xx**2 / (2 * m**7) + 5 * m_x**2 / (4 * m**7) - 7 * m_x**4 / (2 * m**9)
    E4 = grad4 + (k**5 - m**5) / (16 * m**5 * k**5)
    F1 = dm**2 / (k**2 * m)
    F2 = m_x**2 / m**5 + 1 / (4 * m**3) + 3 * m / (4 * k**4) - 1 / k**3
    F3 = grad4 + 1 / (16 * m**5) + 5 * m / (16 * k**6) - 3 / (8 * k**5)
    return dict(E1=E1, E2=E2, E3=E3, E4=E4, F1=F1, F2=F2, F3=F3)


def conserved_report(field):
    """Simpson quadrature of the seven integrals; error estimates by halving."""
    field.check_positive()
    m, m_x, m_xx = field.derivatives(2)
    dens = conserved_densities(m, m_x, m_xx, field.kappa)
    values, errors = {}, {}
    for name in NAMES:
        full = _quad(dens[name], field)
        half = _quad(dens[name][::2], field, 2 * field.h)
        values[name] = full
        errors[name] = abs(full - half) / 15.0
    return ConservedReport(**values, quadrature_error_estimates=errors)


def _quad(values, field, h=None):
    h = field.h if h is None else h
    if field.periodic:
        return float(np.sum(values) * h)
    return integrate(values, h)


def closed_form_invariants(c, kappa):
    """F1 and F2 evaluated on the single soliton of speed c.

    Obtained by writing the profile as ``kappa + (c - kappa^2)/(4 kappa) * v``
    and integrating over the homoclinic orbit in ``z = sqrt(1 - v)``.
    """
    _check_window(c, kappa)
    a, b = c - kappa**2, c - 3 * kappa**2
    log_term = math.log((math.sqrt(a) + math.sqrt(b)) / (math.sqrt(2) * kappa))
    ratio = math.sqrt(b / a)
    F1 = 8 / kappa * (log_term - ratio)
    F2 = 4 / kappa**3 * (log_term - (c + 3 * kappa**2) / (3 * a) * ratio)
    return F1, F2


def _ordered(c1, c2, kappa):
    _check_window(c1, kappa)
    _check_window(c2, kappa)
    if not c2 < c1:
        raise SpeedOrdering(f"speeds must satisfy c2 < c1, got c1={c1}, c2={c2}")


def two_soliton_invariants(c1, c2, kappa):
    """F1, F2 of the 2-soliton as the sum over its separated components."""
    a, b = closed_form_invariants(c1, kappa), closed_form_invariants(c2, kappa)
    return a[0] + b[0], a[1] + b[1]


def soliton_ratios(c, kappa):
    """``(omega1, omega2)`` with ``G2 = omega1 G1`` and ``G3 = omega2 G1`` on the soliton."""
    _check_window(c, kappa)
    a = c - kappa**2
    omega1 = (c + 3 * kappa**2) / (2 * kappa**2 * a)
    omega2 = (3 * c**2 + 2 * c * kappa**2 + 27 * kappa**4) / (16 * kappa**4 * a**2)
    return omega1, omega2


def lagrange_multipliers(c1, c2, kappa):
    _ordered(c1, c2, kappa)
    a1, a2 = 1.0 / (c1 - kappa**2), 1.0 / (c2 - kappa**2)
    lam1 = -1 / (16 * kappa**4) + (a1 + a2) / (2 * kappa**2) + 2 * a1 * a2
    lam2 = -(1 / (4 * kappa**2) + a1 + a2)
    return LagrangePair(lam1, lam2)


def gradient_G(field, lambdas):
    """Pointwise variational gradients ``(G1, G2, G3, G)`` of F1, F2, F3 and F."""
    if not np.all(field.m > 0):
        raise PositivityViolated("gradient needs m > 0")
    m, m1, m2, m3, m4 = field.derivatives(4)
    k = field.kappa
    G1 = 1 / k**2 - 1 / m**2
    G2 = -2 * m2 / m**5 + 5 * m1**2 / m**6 - 0.75 / m**4 + 0.75 / k**4
    G3 = (m4 / m**7 - 14 * m1 * m3 / m**8 - 10.5 * m2**2 / m**8 + 98 * m1**2 * m2 / m**9
          - 94.5 * m1**4 / m**10 - 2.5 * m2 / m**7 + 8.75 * m1**2 / m**8
          - 0.3125 / m**6 + 0.3125 / k**6)
    G = G3 + lambdas.lambda1 * G1 + lambdas.lambda2 * G2
    return G1, G2, G3, G


def criticality_residual(field, lambdas):
    return float(np.max(np.abs(gradient_G(field, lambdas)[3])))
