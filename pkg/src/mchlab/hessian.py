"""The 2x2 Hessian of the reduced action in the multiplier variables."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularJacobian
from .functionals import _ordered, lagrange_multipliers, two_soliton_invariants

__all__ = ["HessianReport", "hessian_M", "det_closed_form", "speed_jacobians"]


@dataclass(frozen=True)
class HessianReport:
    M: np.ndarray
    det_numeric: float
    det_closed_form: float
    eigenvalues: tuple
    inertia: tuple  # (n_plus, n_minus)

    def to_dict(self):
        return {
            "M": [[float(v) for v in row] for row in self.M],
            "det_numeric": self.det_numeric,
            "det_closed_form": self.det_closed_form,
            "eigenvalues": [v if isinstance(v, float) else [v.real, v.imag]
                            for v in self.eigenvalues],
            "inertia": list(self.inertia),
        }


def det_closed_form(c1, c2, kappa):
    _ordered(c1, c2, kappa)
    k2 = kappa**2
    return -16 / k2 * math.sqrt((c1 - k2) * (c2 - k2) * (c1 - 3 * k2) * (c2 - 3 * k2))


def _step(c1, c2, kappa, j, rel):
    c = (c1, c2)[j]
    room = min(c - 3 * kappa**2, 9 * kappa**2 - c, c1 - c2)
    return min(rel * (c - 3 * kappa**2), 0.25 * room)


def _central(fun, c1, c2, j, dc):
    e = np.array([dc, 0.0]) if j == 0 else np.array([0.0, dc])
    plus = np.asarray(fun(c1 + e[0], c2 + e[1]))
    minus = np.asarray(fun(c1 - e[0], c2 - e[1]))
    return (plus - minus) / (2 * dc)


def speed_jacobians(c1, c2, kappa, rel_step=1e-4):
    """``dF/dc`` and ``dlambda/dc`` by Richardson-extrapolated central differences.

    Rows index (F1, F2) or (lambda1, lambda2), columns index (c1, c2).
    """
    _ordered(c1, c2, kappa)

    def F(a, b):
        return two_soliton_invariants(a, b, kappa)

    def lam(a, b):
        p = lagrange_multipliers(a, b, kappa)
        return p.lambda1, p.lambda2

    JF, JL = np.empty((2, 2)), np.empty((2, 2))
    for j in range(2):
        dc = _step(c1, c2, kappa, j, rel_step)
        for J, fun in ((JF, F), (JL, lam)):
            coarse = _central(fun, c1, c2, j, dc)
            fine = _central(fun, c1, c2, j, dc / 2)
            J[:, j] = (4 * fine - coarse) / 3
    return JF, JL


def hessian_M(c1, c2, kappa, rel_step=1e-4, singular_tol=1e-12):
    """``M = (dF/dc) (dlambda/dc)^-1`` with its determinant, eigenvalues and inertia."""
    JF, JL = speed_jacobians(c1, c2, kappa, rel_step)
    det_L = float(np.linalg.det(JL))
    if abs(det_L) < singular_tol * float(np.linalg.norm(JL)) ** 2:
        raise SingularJacobian(f"d lambda / d c is singular (det = {det_L:.3e})")
    M = JF @ np.linalg.inv(JL)
    tr, det = float(np.trace(M)), float(np.linalg.det(M))
    root = cmath.sqrt(tr * tr - 4 * det)
    eig = ((tr - root) / 2, (tr + root) / 2)
    if all(abs(v.imag) < 1e-10 * np.linalg.norm(M) for v in eig):
        eig = tuple(sorted(float(v.real) for v in eig))
    re = [v.real for v in eig]
    inertia = (sum(r > 0 for r in re), sum(r < 0 for r in re))
    return HessianReport(M, det, det_closed_form(c1, c2, kappa), eig, inertia)
