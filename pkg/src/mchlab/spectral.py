"""The second-variation operator L at the 2-soliton and its low spectrum.

L is discretized through its quadratic form

    Q(h) = sum a (D2 h)^2 - sum w (D1 h)^2 + sum b h^2        (times dx)

with ``a = mu^-7``, the first-derivative weight ``w`` and the potential
``b`` (which includes q(mu)), and homogeneous Dirichlet data at both ends.
The matrix is pentadiagonal and symmetric by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, eig_banded
from scipy.sparse import diags

from .errors import DegenerateInput, EigensolverFailure, PositivityViolated
from .fields import _eval_at, default_box, sample_two_soliton
from .functionals import LagrangePair, lagrange_multipliers
from .soliton import _check_window, _pair, jet_mul, x_derivatives

__all__ = [
    "SelfAdjointOperator",
    "SpectrumReport",
    "operator_coefficients",
    "assemble_form",
    "assemble_L",
    "essential_edge",
    "bottom_spectrum",
    "spectrum_box",
    "two_soliton_spectrum",
    "kernel_directions",
    "wronskian",
    "count_sign_changes",
    "wronskian_sign_changes",
    "reciprocal_wronskian",
]


@dataclass(frozen=True, eq=False)
class SelfAdjointOperator:
    """Symmetric pentadiagonal matrix in LAPACK upper-band storage."""

    x0: float
    h: float
    n: int
    bands: np.ndarray  # shape (3, n): superdiag 2, superdiag 1, main diagonal
    lambdas: LagrangePair | None = None
    coefficients: dict = field(default_factory=dict, repr=False)
    boundary: str = "dirichlet"

    @property
    def x(self):
        return self.x0 + self.h * np.arange(self.n)

    def to_sparse(self):
        b = self.bands
        offs = [-2, -1, 0, 1, 2]
        return diags([b[0, 2:], b[1, 1:], b[2], b[1, 1:], b[0, 2:]], offs, format="csr")

    def to_dense(self):
        return self.to_sparse().toarray()

    def matvec(self, v):
        return self.to_sparse() @ v

    def quadratic_form(self, v):
        """``<v, L v>`` with the grid quadrature weight."""
        v = np.asarray(v, dtype=float)
        return float(v @ self.matvec(v)) * self.h


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: np.ndarray
    n_negative: int
    n_kernel: int
    essential_edge: float
    tol: float
    grid: dict

    def to_dict(self):
        return {
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "n_negative": self.n_negative,
            "n_kernel": self.n_kernel,
            "essential_edge": self.essential_edge,
            "tol": self.tol,
            "grid": self.grid,
        }


def operator_coefficients(field, lambdas):
    """Nodal ``a``, ``w`` and ``b`` of the quadratic form of L."""
    if not np.all(field.m > 0):
        raise PositivityViolated("operator needs m > 0")
    mu, m1, m2, m3, m4 = field.derivatives(4)
    l1, l2 = lambdas.lambda1, lambdas.lambda2
    a = mu**-7
    w = 42 * mu**-9 * m1**2 - 14 * mu**-8 * m2 - 2.5 * mu**-7 - 2 * l2 * mu**-5
    # q(mu) with every derivative expanded
    d2_pow = lambda p: p * (p - 1) * mu ** (p - 2) * m1**2 + p * mu ** (p - 1) * m2  # (mu^p)_xx
    d1_cube = (-10 * mu**-11 * m1**4 + 3 * mu**-10 * m1**2 * m2)  # (mu^-10 mu_x^3)_x
    mu8 = mu**-8
    d2_mu8_mxx = (72 * mu**-10 * m1**2 * m2 - 8 * mu**-9 * m2**2 - 16 * mu**-9 * m1 * m3
                  + mu8 * m4)  # (mu^-8 mu_xx)_xx
    q = (28 * mu**-9 * m2**2 + 70 * mu**-9 * m1**2 - 2.5 * d2_pow(-7)
         - 315 * mu**-11 * m1**4 - 126 * d1_cube - 7 * d2_mu8_mxx
         + 30 * l2 * mu**-7 * m1**2 - 2 * l2 * d2_pow(-5))
    b = 15 / 8 * mu**-7 + 2 * l1 * mu**-3 + 3 * l2 * mu**-5 + q
    return a, w, b


def assemble_form(a, w, b, x0, h, lambdas=None):
    """Matrix of ``sum a (D2 v)^2 - sum w (D1 v)^2 + sum b v^2`` with v = 0 outside."""
    a, w, b = (np.asarray(v, dtype=float) for v in (a, w, b))
    n = a.size
    # w at the n+1 midpoints, outer ones taken from the end nodes
    wm = np.empty(n + 1)
    wm[1:-1] = 0.5 * (w[1:] + w[:-1])
    wm[0], wm[-1] = w[0], w[-1]
    h2, h4 = h * h, h**4
    main = np.zeros(n)
    sup1 = np.zeros(n)
    sup2 = np.zeros(n)
    # D2^T diag(a) D2: row j of D2 is (1, -2, 1)/h^2 centred at j
    main += 4 * a
    main[1:] += a[:-1]
    main[:-1] += a[1:]
    sup1[1:] += -2 * a[1:] - 2 * a[:-1]
    sup2[2:] += a[1:-1]
    main /= h4
    sup1 /= h4
    sup2 /= h4
    # -D1^T diag(wm) D1 with D1 forward differences between nodes
    main -= (wm[:-1] + wm[1:]) / h2
    sup1[1:] += wm[1:-1] / h2
    main += b
    bands = np.vstack([sup2, sup1, main])
    return SelfAdjointOperator(float(x0), float(h), n, bands, lambdas,
                               dict(a=a, w=w, b=b))


def assemble_L(field, lambdas):
    a, w, b = operator_coefficients(field, lambdas)
    return assemble_form(a, w, b, field.x0, field.h, lambdas)


def essential_edge(c1, c2, kappa):
    """Lower edge of the essential spectrum of L."""
    _check_window(c1, kappa)
    _check_window(c2, kappa)
    return ((c1 - 3 * kappa**2) * (c2 - 3 * kappa**2)
            / (kappa**7 * (c1 - kappa**2) * (c2 - kappa**2)))


def bottom_spectrum(op, count=8, tol=None, edge=None, vectors=False):
    """Lowest ``count`` eigenvalues and the negative/kernel counts.

    The kernel tolerance defaults to ``10 max|b| h^2``, the size of the
    Rayleigh quotients of discretized exact kernel vectors.
    """
    if tol is None:
        tol = 10 * float(np.max(np.abs(op.coefficients.get("b", op.bands[2])))) * op.h**2
    count = min(count, op.n)
    try:
        out = eig_banded(op.bands, lower=False, eigvals_only=not vectors, select="i",
                         select_range=(0, count - 1))
        vals, vecs = out if vectors else (out, None)
    except (LinAlgError, RuntimeError) as exc:
        raise EigensolverFailure(str(exc)) from exc
    if not np.all(np.isfinite(vals)):
        raise EigensolverFailure("non-finite eigenvalues")
    if vals[0] < _lower_bound(op):
        raise EigensolverFailure("eigenvalue below the Gershgorin bound")
    n_neg = int(np.sum(vals < -tol))
    n_ker = int(np.sum(np.abs(vals) <= tol))
    report = SpectrumReport(np.asarray(vals), n_neg, n_ker,
                            float("nan") if edge is None else float(edge), float(tol),
                            {"x0": op.x0, "h": op.h, "n": op.n})
    return (report, vecs) if vectors else report


def spectrum_box(params, t=0.0, tail=1e-12, step=0.5, max_half_width=1e4):
    """Smallest box (in steps of ``step``) with ``|mu - kappa| < tail`` at both ends.

    A tight box keeps h, and hence the kernel tolerance, small at a given n.
    """
    pair = _pair(params)
    centre, _ = default_box(params, t)
    half = step
    while half <= max_half_width:
        y = pair.invert_x(np.array([centre - half, centre + half]), t)
        m = pair.m_jet(y, t, 0)[0]
        if np.all(np.abs(m - params.kappa) < tail):
            return centre, half
        half += step
    raise DegenerateInput(f"tails do not reach {tail} within half-width {max_half_width}")


def two_soliton_spectrum(params, t=0.0, n=4096, count=8, half_width=None, tol=None):
    """Assemble L on the 2-soliton at time t and return its bottom spectrum."""
    if half_width is None:
        centre, half_width = spectrum_box(params, t)
    else:
        centre, _ = default_box(params, t)
    h = 2 * half_width / (n - 1)
    field = sample_two_soliton(params, t, centre - half_width, h, n)
    lam = lagrange_multipliers(params.c1, params.c2, params.kappa)
    op = assemble_L(field, lam)
    edge = essential_edge(params.c1, params.c2, params.kappa)
    return bottom_spectrum(op, count, tol=tol, edge=edge)


def _lower_bound(op):
    # Gershgorin bound shifted below the spectrum
    b = op.bands
    radius = np.abs(b[1]) + np.abs(np.roll(b[1], -1)) + np.abs(b[0]) + np.abs(np.roll(b[0], -2))
    return float(np.min(b[2] - radius)) - 1.0


# --------------------------------------------------------------------------
# kernel directions and Wronskians


def _kernel_analytic(pair, t, y, kappa, j):
    """``d mu / d y_j0`` at fixed x, and its x-derivative, at the points y.

    At fixed x the derivative is ``-(m A)_x`` with ``A = 2 d/dy_j0 ln(g/f)``
    taken at fixed y.
    """
    k_j = pair.f.k[j - 1]
    m_jet = pair.m_jet(y, t, 3)
    A = [2 * k_j * v for v in pair.log_ratio_jet(y, t, 3, prefix=str(j))]
    mA = jet_mul(m_jet, A)
    d = x_derivatives(mA, m_jet, 2)
    return -d[1], -d[2]


def kernel_directions(params, t, x0, h, n, method="analytic", eps=1e-3, with_x=False):
    """The translation modes ``mu_j = d mu / d y_j0`` at fixed x on a grid.

    ``method="fd"`` uses central differences in the phase with one
    Richardson step (steps ``eps`` and ``eps/2``).
    """
    xt = x0 + h * np.arange(n)
    if method == "analytic":
        pair = _pair(params)
        y = pair.invert_x(xt, t)
        (mu1, dmu1), (mu2, dmu2) = (_kernel_analytic(pair, t, y, params.kappa, j) for j in (1, 2))
    elif method == "fd":
        mu1, dmu1 = _kernel_fd(params, t, xt, 1, eps)
        mu2, dmu2 = _kernel_fd(params, t, xt, 2, eps)
    else:
        raise ValueError(f"unknown method {method!r}")
    gram = _gram_det(mu1, mu2)
    if not gram > 0:
        raise DegenerateInput("kernel directions are linearly dependent")
    return (mu1, mu2, dmu1, dmu2) if with_x else (mu1, mu2)


def _kernel_fd(params, t, xt, j, eps):
    def sample(delta):
        p = params.with_phases(params.y10 + (delta if j == 1 else 0.0),
                               params.y20 + (delta if j == 2 else 0.0))
        pair = _pair(p)
        y = pair.invert_x(xt, t)
        m = _eval_at(pair, y, t, 1)
        return m[0], m[1]

    def central(e):
        (a, da), (b, db) = sample(e), sample(-e)
        return (a - b) / (2 * e), (da - db) / (2 * e)

    (c1, d1), (c2, d2) = central(eps), central(eps / 2)
    return (4 * c2 - c1) / 3, (4 * d2 - d1) / 3


def _gram_det(u, v):
    uu, vv, uv = float(u @ u), float(v @ v), float(u @ v)
    return (uu * vv - uv * uv) / (uu * vv) if uu > 0 and vv > 0 else 0.0


def wronskian(mu1, mu2, dmu1, dmu2):
    return mu1 * dmu2 - mu2 * dmu1


def count_sign_changes(values, threshold):
    """Sign changes of ``values`` restricted to samples with ``|v| > threshold``."""
    v = np.asarray(values)
    kept = v[np.abs(v) > threshold]
    if kept.size < 2:
        return 0
    return int(np.sum(np.signbit(kept[1:]) != np.signbit(kept[:-1])))


def wronskian_sign_changes(mu1, mu2, h=None, dmu1=None, dmu2=None, gram_tol=1e-10):
    """Number of sign changes of ``mu1 mu2' - mu2 mu1'`` above the noise floor.

    Derivatives are spectral when not supplied.
    """
    mu1, mu2 = np.asarray(mu1, dtype=float), np.asarray(mu2, dtype=float)
    if _gram_det(mu1, mu2) < gram_tol:
        raise DegenerateInput("kernel pair is numerically parallel")
    if dmu1 is None or dmu2 is None:
        from .fields import spectral_derivatives
        dmu1 = spectral_derivatives(mu1, h, 1)[1]
        dmu2 = spectral_derivatives(mu2, h, 1)[1]
    wr = wronskian(mu1, mu2, dmu1, dmu2)
    scale = float(np.max(np.abs(wr)))
    return count_sign_changes(wr, 1e3 * np.finfo(float).eps * scale)


def reciprocal_wronskian(params, tau, y):
    """The Wronskian in the reciprocal variable built from ln(g/f).

    ``(L)_{y xi1} (L)_{y xi2 y} - (L)_{y xi2} (L)_{y xi1 y}`` with
    ``L = ln(g/f)``; its zeros match those of the x-Wronskian of the
    fixed-y translation modes.
    """
    f, g = _pair(params).f, _pair(params).g
    specs = ["1y", "1yy", "2y", "2yy"]
    lf = f.log_derivatives(y, tau, specs)
    lg = g.log_derivatives(y, tau, specs)
    a1, a1y, a2, a2y = (b - a for a, b in zip(lf, lg))
    return a1 * a2y - a2 * a1y
